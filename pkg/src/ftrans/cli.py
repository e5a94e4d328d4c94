"""Command-line interface.

Exit status: 0 on success, 1 on usage or configuration errors, 2 when a
mathematical invariant fails (regularity counterexample, sandwich violation,
hierarchy mismatch, unverifiable witness).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .density import asymptotic_density_estimate, banach_density_estimate, report_to_csv
from .dynamics import DyadicVector, criterion_check, default_sandwich_grid, return_set_bounds
from .errors import ConfigurationError, DomainError, InvariantViolation
from .families import FAMILIES, Verdict, _jsonable, default_params, delta_verdict, ip_verdict, membership_verdict, verify
from .finite import verify_lemma23
from .intset import RunSet
from .shifts import (
    CLASSES,
    CONSTRUCTIONS,
    EXTRA_CONSTRUCTIONS,
    ClassifyConfig,
    WeightSpec,
    classify_shift,
    compile_exponent_profile,
    generate_weight,
    return_time_sets,
    ruler_sizes,
    verify_classification,
)

HORIZON_CAP_ENV = "FTRANS_HORIZON_CAP"
SIM_CAP_ENV = "FTRANS_SIMULATION_CAP"
DEFAULT_HORIZON_CAP = 10**8
DEFAULT_SIM_CAP = 10**5

# Classification claims reproduced by ``report hierarchy``: construction -> {class: holds}
EXPECTED_CLASSIFICATION = {
    "p41_1": {"weakly_mixing": True, "D_upper": False},
    "p41_2": {"D_upper_1": True, "D_lower": False},
    "p41_3": {"D_lower_1": True, "topologically_ergodic": False},
    "p52_ip": {"topologically_ergodic": True, "ip_star": False},
    "p54_delta": {"delta_star": True, "mixing": False},
    "p58_rhc": {"D_upper_1": False},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    horizon: int | None = None
    t_grid: list = field(default_factory=lambda: [0, 1, 2])
    j_grid: list = field(default_factory=lambda: [0, 1, 2])
    thresholds: dict = field(default_factory=dict)
    output: str = "-"
    format: str = "json"
    seed: int = 0
    options: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return _plain(asdict(self))


def _plain(x):
    """JSON form with small ints kept as numbers and big ones as decimal strings."""
    if isinstance(x, bool) or x is None or isinstance(x, (str, float)):
        return x
    if isinstance(x, int):
        return x if abs(x) < 2**53 else str(x)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return str(x)


# -- argument helpers -------------------------------------------------------------


def _int(text: str) -> int:
    """Integers, also written as ``1e6`` or ``10**6``."""
    text = text.strip()
    try:
        if "**" in text:
            b, e = text.split("**")
            return int(b) ** int(e)
        if "e" in text.lower():
            m, e = text.lower().split("e")
            return int(m) * 10 ** int(e)
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _int_list(text: str) -> list[int]:
    return [_int(x) for x in text.split(",") if x.strip()]


def _frac(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def _param(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError("parameters look like key=value")
    k, v = text.split("=", 1)
    try:
        val = json.loads(v)
    except json.JSONDecodeError:
        val = v
    return k, val


def _cap(horizon: int, env: str, default: int) -> int:
    raw = os.environ.get(env)
    try:
        cap = _int(raw) if raw else default
    except argparse.ArgumentTypeError:
        raise ConfigurationError(f"{env} must be an integer") from None
    if horizon > cap:
        raise ConfigurationError(f"horizon {horizon} exceeds the cap {cap}; raise it with {env}")
    return horizon


def _weight(args) -> WeightSpec:
    if getattr(args, "spec", None):
        with open(args.spec) as fh:
            return WeightSpec.from_json(fh.read())
    if not getattr(args, "construction", None):
        raise ConfigurationError("give --construction or --spec")
    params = dict(getattr(args, "param", None) or [])
    if args.horizon is not None and args.construction not in ("constant", "explicit"):
        params.setdefault("horizon", args.horizon)
    return generate_weight(args.construction, params)


def _classify_config(args) -> ClassifyConfig:
    kw = {"t_grid": tuple(args.t_grid), "j_grid": tuple(args.j_grid)}
    if args.epsilon is not None:
        kw["epsilon"] = args.epsilon
    if args.n_max is not None:
        kw["N_max"] = args.n_max
    if args.depth is not None:
        kw["ip_depth"] = args.depth
    if args.v_max is not None:
        kw["v_max"] = args.v_max
    if getattr(args, "classes", None):
        kw["classes"] = tuple(args.classes)
    return ClassifyConfig(**kw)


def _load_set(args, horizon: int) -> RunSet:
    if args.set_file:
        with open(args.set_file) as fh:
            return RunSet.from_json(fh.read())
    if args.elements:
        return RunSet.from_elements(_int_list(args.elements))
    if args.construction:
        w = _weight(args)
        prof = compile_exponent_profile(w, horizon + abs(args.j) + 1, horizon + abs(args.j) + 1)
        fwd, bwd = return_time_sets(prof, args.t, args.j, horizon)
        return bwd if args.side == "backward" else fwd
    raise ConfigurationError("give --set-file, --elements or --construction")


# -- commands -----------------------------------------------------------------------


def _cmd_generate(args, cfg: RunConfig):
    w = _weight(args)
    return w.to_json_obj(), None


def _cmd_classify(args, cfg: RunConfig):
    w = _weight(args)
    H = _cap(args.horizon or 10**6, HORIZON_CAP_ENV, DEFAULT_HORIZON_CAP)
    conf = _classify_config(args)
    res = classify_shift(w, H, conf)
    # re-load through JSON and re-check every witness
    reloaded = {k: Verdict.from_json(v.to_json()) for k, v in res.items()}
    bad = verify_classification(w, reloaded, H, conf)
    if bad:
        raise InvariantViolation(f"witnesses do not verify for {bad}")
    body = {"construction": w.name, "horizon": str(H), "classes": {k: v.to_json_obj() for k, v in res.items()}}
    summary = {k: v.status for k, v in res.items()}
    body["summary"] = summary
    rows = [["class", "status"]] + [[k, v] for k, v in summary.items()]
    return body, rows


def _ruler_checkpoints(blocks: int) -> list[int]:
    return [ruler_sizes(n)[0] + n + 1 for n in range(1, blocks + 1)]


def _cmd_density(args, cfg: RunConfig):
    if args.construction == "p44_ruler" and args.blocks:
        cps = _ruler_checkpoints(args.blocks)
        H = cps[-1]
    elif args.blocks and args.construction:
        w = _weight(args)
        cps = [c for c in w.checkpoints][: args.blocks]
        if not cps:
            raise ConfigurationError(f"{args.construction} has no block checkpoints")
        H = cps[-1]
    else:
        H = args.horizon or 10**6
        cps = None
    H = _cap(H, HORIZON_CAP_ENV, DEFAULT_HORIZON_CAP)
    if args.construction and args.horizon is None:
        args.horizon = H
    A = _load_set(args, H)
    rep = asymptotic_density_estimate(A, cps, tail_fraction=args.tail_fraction, horizon=H)
    body = {
        "horizon": str(H),
        "checkpoints": [[str(n), str(c)] for n, c in rep.checkpoints],
        "lower_estimate": _jsonable(rep.lower_estimate),
        "upper_estimate": _jsonable(rep.upper_estimate),
        "tail_start": str(rep.tail_start),
        "witnesses": _jsonable(rep.witnesses),
    }
    if args.window:
        b = banach_density_estimate(A, args.window, H)
        body["banach"] = _jsonable([list(r) for r in b.banach])
        body["banach_witnesses"] = _jsonable(b.witnesses)
    return body, report_to_csv(rep)


def _cmd_families(args, cfg: RunConfig):
    H = _cap(args.horizon or 10**4, HORIZON_CAP_ENV, DEFAULT_HORIZON_CAP)
    A = _load_set(args, H)
    names = args.family or list(FAMILIES)
    out = {}
    for name in names:
        if name == "IP_star":
            v = ip_verdict(A, "misses_FS", depth=args.depth or 3, horizon=H)
        elif name == "Delta_star":
            v = delta_verdict(A, "dual_evidence", horizon=H, v_max=args.v_max or 50)
        else:
            over = {}
            if args.epsilon is not None:
                over["epsilon"] = args.epsilon
            if args.n_max is not None:
                over["N_max"] = args.n_max
            v = membership_verdict(A, name, H, default_params(H, **over))
        if not verify(Verdict.from_json(v.to_json()), A):
            raise InvariantViolation(f"{name} witness does not verify")
        out[name] = v
    body = {"horizon": str(H), "verdicts": {k: v.to_json_obj() for k, v in out.items()}}
    rows = [["family", "status"]] + [[k, v.status] for k, v in out.items()]
    return body, rows


def _cmd_algebra(args, cfg: RunConfig):
    if args.n > 5:
        raise ConfigurationError("exhaustive verification is capped at n = 5")
    rep = verify_lemma23(args.n)
    body = rep.to_json_obj()
    rows = [["property", "count"], ["families", rep.families]] + [[k, v] for k, v in rep.tallies.items()]
    if not rep.ok:
        return body, rows, 2
    return body, rows


def _cmd_sandwich(args, cfg: RunConfig):
    w = _weight(args)
    H = _cap(args.horizon or 10**4, SIM_CAP_ENV, DEFAULT_SIM_CAP)
    grid = default_sandwich_grid(w.kind)
    if args.j is not None or args.N is not None or args.R is not None:
        if None in (args.j, args.N, args.R):
            raise ConfigurationError("give all of --j, --N, --R or none")
        grid = [(args.j, args.N, args.R)]
    reach = H + max(abs(j) for j, _, _ in grid) + 1
    prof = compile_exponent_profile(w, reach, reach if w.kind == "bilateral" else None)
    results = []
    rows = [["j", "N", "R", "lower_size", "upper_size", "verified", "tight"]]
    for j, N, R in grid:
        s = return_set_bounds(prof, j, N, R, H, norm=args.norm)
        results.append(s.to_json_obj())
        rows.append([j, N, R, s.lower.size(), s.upper.size(), s.verified, s.tight])
    return {"construction": w.name, "horizon": str(H), "bounds": results}, rows


def _parse_vector(text: str, kind: str) -> DyadicVector:
    entries = {}
    for part in text.split(","):
        if not part.strip():
            continue
        if ":" not in part:
            raise ConfigurationError("vector entries look like index:value")
        k, v = part.split(":", 1)
        entries[int(k)] = Fraction(v)
    return DyadicVector(entries, kind)


def _cmd_criterion(args, cfg: RunConfig):
    w = _weight(args)
    H = _cap(args.horizon or 10**3, SIM_CAP_ENV, DEFAULT_SIM_CAP)
    x = _parse_vector(args.x, w.kind)
    rep = criterion_check(w, x, args.epsilon_sim, H, args.t_grid, args.j_grid, norm=args.norm)
    rows = [["t", "extra_j", "backward_violations", "forward_violations"]]
    for r in rep.rows:
        rows.append([r["t"], r["extra_j"], r["backward_violations"].size(), r["forward_violations"].size()])
    body = {"construction": w.name, "report": rep.to_json_obj()}
    if not rep.ok:
        return body, rows, 2
    return body, rows


def hierarchy_rows(horizon: int, config: ClassifyConfig | None = None) -> list[dict]:
    """One row per construction and class with the verdict and the expected claim (if any)."""
    rows = []
    for c in CONSTRUCTIONS:
        w = generate_weight(c, {"horizon": horizon})
        res = classify_shift(w, horizon, config)
        expected = EXPECTED_CLASSIFICATION.get(c, {})
        for cls in CLASSES:
            if cls not in res:
                continue
            v = res[cls]
            exp = expected.get(cls)
            rows.append(
                {
                    "construction": c,
                    "class": cls,
                    "status": v.status,
                    "expected": None if exp is None else ("holds" if exp else "fails"),
                    "match": None if exp is None else (v.holds == exp),
                }
            )
    return rows


def _cmd_hierarchy(args, cfg: RunConfig):
    H = _cap(args.horizon or 10**6, HORIZON_CAP_ENV, DEFAULT_HORIZON_CAP)
    rows = hierarchy_rows(H, _classify_config(args))
    mismatches = [r for r in rows if r["match"] is False]
    table = [["construction", "class", "status", "expected", "match"]]
    for r in rows:
        table.append([r["construction"], r["class"], r["status"], r["expected"] or "", "" if r["match"] is None else r["match"]])
    body = {"horizon": str(H), "rows": rows, "mismatches": len(mismatches)}
    if mismatches:
        return body, table, 2
    return body, table


# -- parser ----------------------------------------------------------------------------


def _add_grid(p):
    p.add_argument("--t-grid", type=_int_list, default=[0, 1, 2])
    p.add_argument("--j-grid", type=_int_list, default=[0, 1, 2])
    p.add_argument("--epsilon", type=_frac, default=None, help="density threshold")
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--depth", type=int, default=None, help="IP search depth")
    p.add_argument("--v-max", type=int, default=None)


def _add_weight(p):
    p.add_argument("--construction", choices=CONSTRUCTIONS + EXTRA_CONSTRUCTIONS)
    p.add_argument("--spec", help="WeightSpec JSON file")
    p.add_argument("--param", type=_param, action="append", help="construction parameter key=value (JSON value)")


def _add_set(p):
    p.add_argument("--set-file", help="RunSet JSON file")
    p.add_argument("--elements", help="comma separated elements")
    p.add_argument("--t", type=int, default=0, help="level exponent of the return-time set")
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--side", choices=("forward", "backward"), default="forward")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ftrans", description=__doc__.splitlines()[0])
    parser.add_argument("--output", "-o", default="-", help="output path or - for stdout")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("generate", help="emit a WeightSpec")
    _add_weight(p)
    p.add_argument("--horizon", type=_int)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("classify", help="classify a weighted shift")
    _add_weight(p)
    p.add_argument("--horizon", type=_int)
    p.add_argument("--classes", type=lambda s: s.split(","))
    _add_grid(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("density", help="prefix and window densities")
    _add_weight(p)
    _add_set(p)
    p.add_argument("--horizon", type=_int)
    p.add_argument("--blocks", type=int, help="use the first N block checkpoints")
    p.add_argument("--window", type=_int_list, help="Banach window lengths")
    p.add_argument("--tail-fraction", type=float, default=0.5)
    p.set_defaults(func=_cmd_density, format_default="csv")

    p = sub.add_parser("families", help="family membership verdicts for a set")
    _add_weight(p)
    _add_set(p)
    p.add_argument("--horizon", type=_int)
    p.add_argument("--family", action="append", choices=FAMILIES + ("IP_star", "Delta_star"))
    p.add_argument("--epsilon", type=_frac, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--v-max", type=int, default=None)
    p.set_defaults(func=_cmd_families)

    p = sub.add_parser("algebra", help="finite-universe lattice checks")
    asub = p.add_subparsers(dest="action", parser_class=_Parser)
    q = asub.add_parser("verify-lemma23", help="exhaustive partition-regularity equivalences")
    q.add_argument("--n", type=int, default=4)
    q.set_defaults(func=_cmd_algebra)

    p = sub.add_parser("simulate", help="exact simulation of the shift")
    ssub = p.add_subparsers(dest="action", parser_class=_Parser)
    q = ssub.add_parser("sandwich", help="bounds on return sets")
    _add_weight(q)
    q.add_argument("--horizon", type=_int)
    q.add_argument("--j", type=int)
    q.add_argument("--N", type=int)
    q.add_argument("--R", type=int)
    q.add_argument("--norm", choices=("sup", "l1"), default="sup")
    q.set_defaults(func=_cmd_sandwich)
    q = ssub.add_parser("criterion", help="criterion inclusions for a vector")
    _add_weight(q)
    q.add_argument("--horizon", type=_int)
    q.add_argument("--x", default="0:1", help="entries index:value, e.g. 0:1,1:1/2")
    q.add_argument("--epsilon", dest="epsilon_sim", type=_frac, default=Fraction(1, 16))
    q.add_argument("--t-grid", type=_int_list, default=[0])
    q.add_argument("--j-grid", type=_int_list, default=[0])
    q.add_argument("--norm", choices=("sup", "l1"), default="sup")
    q.set_defaults(func=_cmd_criterion)

    p = sub.add_parser("report", help="summary reports")
    rsub = p.add_subparsers(dest="action", parser_class=_Parser)
    q = rsub.add_parser("hierarchy", help="construction x class verdict matrix")
    q.add_argument("--horizon", type=_int)
    _add_grid(q)
    q.set_defaults(func=_cmd_hierarchy)
    return parser


# -- output -------------------------------------------------------------------------------


def _render(body, rows, fmt: str, cfg: RunConfig) -> str:
    if fmt == "csv":
        if isinstance(rows, str):
            return rows
        if rows is None:
            raise ConfigurationError("this command has no CSV form")
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        return buf.getvalue()
    doc = {"config": cfg.to_json_obj(), "result": body}
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _write(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ftrans-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _run_config(args, argv) -> RunConfig:
    command = " ".join(x for x in (args.command, getattr(args, "action", None)) if x)
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "format_default", "output", "format", "seed")}
    thresholds = {k: opts.pop(k) for k in ("epsilon", "n_max", "depth", "v_max") if k in opts}
    return RunConfig(
        command=command,
        horizon=opts.pop("horizon", None),
        t_grid=list(opts.pop("t_grid", [])),
        j_grid=list(opts.pop("j_grid", [])),
        thresholds=thresholds,
        output=args.output,
        format=args.format,
        seed=args.seed,
        options=opts,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError("missing command; see --help")
        if "--format" not in argv and getattr(args, "format_default", None):
            args.format = args.format_default
        cfg = _run_config(args, argv)
        out = args.func(args, cfg)
        status = out[2] if len(out) == 3 else 0
        _write(_render(out[0], out[1], args.format, cfg), args.output)
        return status
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (ConfigurationError, DomainError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except InvariantViolation as e:
        print(f"invariant violated: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
