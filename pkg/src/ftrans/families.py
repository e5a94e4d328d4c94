"""Horizon-bounded membership verdicts for Furstenberg families.

Every verdict carries a witness that :func:`verify` can re-check against the
set it was computed for.  Statuses are ``holds_at_horizon`` and
``fails_at_horizon``; ``certified`` is only produced by the shifts module for
eventually periodic weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .density import asymptotic_density_estimate, banach_density_estimate
from .errors import ConfigurationError, DomainError
from .intset import INFINITE, RunSet

CERTIFIED = "certified"
HOLDS = "holds_at_horizon"
FAILS = "fails_at_horizon"
STATUSES = (CERTIFIED, HOLDS, FAILS)

FAMILIES = (
    "cofinite",
    "thick",
    "syndetic",
    "piecewise_syndetic",
    "thickly_syndetic",
    "D_upper_pos",
    "D_lower_pos",
    "BD_upper_pos",
    "BD_lower_pos",
    "D_upper_1",
    "D_lower_1",
    "BD_upper_1",
    "BD_lower_1",
)

__all__ = [
    "CERTIFIED",
    "FAILS",
    "FAMILIES",
    "HOLDS",
    "Verdict",
    "default_params",
    "delta_verdict",
    "family_transform",
    "finite_sums",
    "ip_verdict",
    "membership_verdict",
    "verify",
]


@dataclass(frozen=True)
class Verdict:
    family: str
    status: str
    horizon: int
    witness: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")

    @property
    def holds(self) -> bool:
        return self.status in (CERTIFIED, HOLDS)

    def to_json_obj(self) -> dict:
        return {
            "family": self.family,
            "status": self.status,
            "horizon": str(self.horizon),
            "witness": _jsonable(self.witness),
            "params": _jsonable(self.params),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Verdict":
        return cls(
            family=obj["family"],
            status=obj["status"],
            horizon=int(obj["horizon"]),
            witness=_unjson(obj["witness"]),
            params=_unjson(obj["params"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "Verdict":
        return cls.from_json_obj(json.loads(text))


# Big integers become {"int": "..."} and rationals {"frac": [p, q]} so that a
# JSON round trip is lossless.
def _jsonable(x: Any):
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return {"int": str(int(x))}
    if isinstance(x, Fraction):
        return {"frac": [str(x.numerator), str(x.denominator)]}
    if isinstance(x, float):
        return x
    if x is INFINITE:
        return {"inf": True}
    if isinstance(x, RunSet):
        return {"runset": x.to_json_obj()}
    if isinstance(x, Verdict):
        return {"verdict": x.to_json_obj()}
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _unjson(x: Any):
    if isinstance(x, dict):
        if set(x) == {"int"}:
            return int(x["int"])
        if set(x) == {"frac"}:
            return Fraction(int(x["frac"][0]), int(x["frac"][1]))
        if set(x) == {"inf"}:
            return INFINITE
        if set(x) == {"runset"}:
            return RunSet.from_json_obj(x["runset"])
        if set(x) == {"verdict"}:
            return Verdict.from_json_obj(x["verdict"])
        return {k: _unjson(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_unjson(v) for v in x]
    return x


def default_params(horizon: int, **overrides) -> dict:
    """Threshold defaults, all derived from the horizon unless overridden."""
    r = math.isqrt(int(horizon))
    p = {
        "epsilon": Fraction(1, 10),
        "delta": Fraction(1, 100),
        "g_max": max(r, 1),
        "L_req": max(r, 1),
        "G_max": max(math.isqrt(r), 1),
        "N_max": 2,
        "s": max(r, 1),
        "delta_banach": None,
        "tail_fraction": Fraction(1, 2),
        "blocks": None,
        "tail_start": None,
    }
    for k, v in overrides.items():
        if k not in p:
            raise ConfigurationError(f"unknown family parameter {k!r}")
        p[k] = v
    for k in ("epsilon", "delta", "tail_fraction"):
        p[k] = Fraction(p[k])
    if p["delta_banach"] is not None:
        p["delta_banach"] = Fraction(p["delta_banach"])
    if p["blocks"] is not None:
        p["blocks"] = [int(b) for b in p["blocks"]]
    if p["tail_start"] is None:
        p["tail_start"] = tail_start(int(horizon), p["blocks"])
    return p


def tail_start(horizon: int, blocks: Sequence[int] | None = None) -> int:
    """Where the tail of ``[1, horizon]`` begins for tail-type evidence.

    Half the horizon, or earlier when block boundaries are known: the tail then
    spans at least the last two complete blocks, so a lacunary structure whose
    latest block ends well before the horizon is still seen.
    """
    t = horizon // 2
    if blocks:
        inside = sorted(b for b in set(blocks) if 0 < b <= horizon)
        if len(inside) >= 2:
            t = min(t, inside[-2])
    return t


def _block_stat(A: RunSet, blocks: Sequence[int], horizon: int, kind: str) -> list[tuple[int, int, int]]:
    """Per-block (lo, hi, stat) for blocks ``(lo, hi]`` cut at the given boundaries.

    The statistic is the longest run inside the block (``kind="run"``) or the
    largest gap whose right element lies in the block (``kind="gap"``, 1 when
    the block has elements but no gap, 0 when it is empty).
    """
    edges = [0] + sorted(b for b in set(blocks) if 0 < b <= horizon)
    part = A.truncate(horizon)
    s = part.starts.astype(object)
    e = part.ends.astype(object)
    out = []
    for lo, hi in zip(edges, edges[1:]):
        i0 = int(np.searchsorted(e, lo + 1, side="right"))  # first run ending after lo
        i1 = int(np.searchsorted(s, hi, side="right"))  # runs starting <= hi
        if i1 <= i0:
            out.append((lo, hi, 0))
            continue
        if kind == "run":
            a = np.maximum(s[i0:i1], lo + 1)
            b = np.minimum(e[i0:i1], hi + 1)
            out.append((lo, hi, int(max(b - a))))
        else:
            j0 = max(i0, 1)
            d = s[j0:i1] - (e[j0 - 1 : i1 - 1] - 1)
            d = d[s[j0:i1] > lo]
            out.append((lo, hi, int(max(d)) if len(d) else 1))
    return out


def _increasing_tail(stats: list[tuple[int, int, int]], count: int = 3) -> bool:
    vals = [s for _, _, s in stats]
    if len(vals) < count:
        return False
    tail = vals[-count:]
    return all(a < b for a, b in zip(tail, tail[1:]))


# -- individual families -----------------------------------------------------


def _syndetic(A: RunSet, H: int, p: dict) -> tuple[str, dict]:
    part = A.truncate(H)
    g_max = p["g_max"]
    if p["blocks"]:
        stats = _block_stat(A, p["blocks"], H, "gap")
        if _increasing_tail(stats):
            return FAILS, {"reason": "gap_growth", "block_gaps": stats}
    g = part.max_gap()
    if g is INFINITE:
        return FAILS, {"reason": "fewer_than_two_elements"}
    if g > g_max:
        return FAILS, {"reason": "gap", "gap_pair": part.max_gap_at()}
    last = part.max()
    if last < H - g:
        return FAILS, {"reason": "tail", "last": last, "gap": g}
    return HOLDS, {"gap": g, "last": last}


def _thick(A: RunSet, H: int, p: dict) -> tuple[str, dict]:
    start, length = A.longest_run(H)
    if length >= p["L_req"]:
        return HOLDS, {"run_start": start, "run_length": length}
    if p["blocks"]:
        stats = _block_stat(A, p["blocks"], H, "run")
        if _increasing_tail(stats) and stats[-1][2] >= 1:
            return HOLDS, {"reason": "run_growth", "block_runs": stats}
    return FAILS, {"max_run": length}


def _cofinite(A: RunSet, H: int, p: dict) -> tuple[str, dict]:
    missing = A.complement(H)
    if missing.is_empty():
        return HOLDS, {"last_missing": 0}
    last = missing.max()
    if last <= p["tail_start"]:
        return HOLDS, {"last_missing": last}
    return FAILS, {"missing": last}


def _piecewise_syndetic(A: RunSet, H: int, p: dict) -> tuple[str, dict]:
    part = A.truncate(H)
    if part.is_empty():
        return FAILS, {"best_span": 0}
    s = np.asarray(part.starts, dtype=object)
    e = np.asarray(part.ends, dtype=object)
    best = (0, 0, 0)  # span, lo, hi
    lo_i = 0
    for i in range(len(s)):
        if i and s[i] - (e[i - 1] - 1) > p["G_max"]:
            lo_i = i
        span = e[i] - s[lo_i]
        if span > best[0]:
            best = (int(span), int(s[lo_i]), int(e[i]) - 1)
    span, lo, hi = best
    if span >= p["L_req"]:
        g = part.restrict(lo, hi).max_gap()
        return HOLDS, {"window": [lo, hi], "gap": 1 if g is INFINITE else g}
    return FAILS, {"best_span": span, "window": [lo, hi]}


def _thickly_syndetic(A: RunSet, H: int, p: dict) -> tuple[str, dict]:
    trace = []
    for N in range(int(p["N_max"]) + 1):
        st, w = _syndetic(A.shrink(N, H), H, p)
        trace.append({"N": N, "status": st, "witness": w})
        if st == FAILS:
            return FAILS, {"trace": trace}
    return HOLDS, {"trace": trace}


def _density(A: RunSet, H: int, p: dict, which: str, level: str) -> tuple[str, dict]:
    thr = p["delta"] if level == "pos" else 1 - p["epsilon"]
    rep = asymptotic_density_estimate(A, horizon=H, tail_fraction=float(p["tail_fraction"]))
    if which == "upper":
        val, at = rep.upper_estimate, rep.witnesses["upper_at"]
    else:
        val, at = rep.lower_estimate, rep.witnesses["lower_at"]
    w = {"estimate": val, "at": at, "count": A.prefix_count(at), "tail_start": rep.tail_start}
    return (HOLDS if val >= thr else FAILS), w


def _banach(A: RunSet, H: int, p: dict, which: str, level: str) -> tuple[str, dict]:
    # unbounded gaps force lower Banach density 0, unbounded runs force upper 1
    if p["blocks"] and which == "lower":
        stats = _block_stat(A, p["blocks"], H, "gap")
        if _increasing_tail(stats):
            return FAILS, {"reason": "gap_growth", "block_gaps": stats}
    if p["blocks"] and which == "upper":
        stats = _block_stat(A, p["blocks"], H, "run")
        if _increasing_tail(stats) and stats[-1][2] >= 1:
            return HOLDS, {"reason": "run_growth", "block_runs": stats}
    s = int(p["s"])
    if level == "pos":
        thr = p["delta_banach"] if p["delta_banach"] is not None else Fraction(1, s)
    else:
        thr = 1 - p["epsilon"]
    rep = banach_density_estimate(A, [s], H)
    _, lo, hi = rep.banach[0]
    info = rep.witnesses["windows"][s]
    if which == "upper":
        val, k, c = hi, info["max_k"], info["max_count"]
    else:
        val, k, c = lo, info["min_k"], info["min_count"]
    w = {"s": s, "estimate": val, "k": k, "count": c, "k_lo": rep.tail_start}
    return (HOLDS if val >= thr else FAILS), w


_DISPATCH = {
    "cofinite": _cofinite,
    "thick": _thick,
    "syndetic": _syndetic,
    "piecewise_syndetic": _piecewise_syndetic,
    "thickly_syndetic": _thickly_syndetic,
    "D_upper_pos": lambda A, H, p: _density(A, H, p, "upper", "pos"),
    "D_lower_pos": lambda A, H, p: _density(A, H, p, "lower", "pos"),
    "D_upper_1": lambda A, H, p: _density(A, H, p, "upper", "one"),
    "D_lower_1": lambda A, H, p: _density(A, H, p, "lower", "one"),
    "BD_upper_pos": lambda A, H, p: _banach(A, H, p, "upper", "pos"),
    "BD_lower_pos": lambda A, H, p: _banach(A, H, p, "lower", "pos"),
    "BD_upper_1": lambda A, H, p: _banach(A, H, p, "upper", "one"),
    "BD_lower_1": lambda A, H, p: _banach(A, H, p, "lower", "one"),
}


def membership_verdict(A: RunSet, family: str, horizon: int, params: dict | None = None) -> Verdict:
    """Decide ``A ∈ family`` at ``horizon`` with the documented thresholds."""
    if family not in _DISPATCH:
        raise ConfigurationError(f"unknown family {family!r}; expected one of {FAMILIES}")
    horizon = int(horizon)
    if horizon < 4:
        raise ConfigurationError("horizon must be at least 4")
    p = default_params(horizon, **(params or {}))
    if family.startswith("BD") and p["s"] > horizon - horizon // 2:
        raise ConfigurationError(f"window length {p['s']} exceeds half the horizon {horizon}")
    status, witness = _DISPATCH[family](A, horizon, p)
    return Verdict(family, status, horizon, witness, p)


# -- IP sets -----------------------------------------------------------------


def finite_sums(generators: Sequence[int], horizon: int | None = None) -> tuple[list[int], int]:
    """Sorted distinct non-empty subset sums, and how many exceeded ``horizon``."""
    sums: set[int] = set()
    for g in generators:
        sums |= {s + g for s in sums} | {int(g)}
    out = sorted(sums)
    if horizon is None:
        return out, 0
    kept = [s for s in out if s <= horizon]
    return kept, len(out) - len(kept)


def _fs_search(C: RunSet, depth: int, cap: int, branch: int, budget: int, start: int = 1) -> list[int] | None:
    """Increasing generators x_1 < ... < x_depth whose finite sums all lie in C."""
    nodes = 0

    def rec(gens: list[int], sums: list[int], cand: RunSet) -> list[int] | None:
        nonlocal nodes
        if len(gens) == depth:
            return gens
        lo = gens[-1] + 1 if gens else start
        pool = cand.restrict(lo, cap)
        tried = 0
        for a, b in pool.runs:
            for x in range(a, b):
                if tried >= branch or nodes >= budget:
                    return None
                tried += 1
                nodes += 1
                # next candidates y need y, y + x and y + x + s in C
                nxt = cand.intersect(C.shift_minus(x))
                for s in sums:
                    nxt = nxt.intersect(C.shift_minus(x + s))
                    if nxt.is_empty():
                        break
                found = rec(gens + [x], sums + [x] + [x + s for s in sums], nxt)
                if found is not None:
                    return found
        return None

    return rec([], [], C)


def ip_verdict(
    A: RunSet,
    mode: str,
    generators: Sequence[int] | None = None,
    depth: int = 3,
    horizon: int = 10**4,
    branch: int = 8,
    budget: int = 20000,
    min_generator: int | None = None,
) -> Verdict:
    """IP evidence at a horizon.

    ``contains_FS`` reports whether the finite sums of ``generators`` inside
    ``[1, horizon]`` all lie in ``A``.  ``misses_FS`` looks for finite sums
    avoiding ``A`` (explicit generators, or a depth-bounded search); finding
    them refutes ``A ∈ IP*`` at the horizon.  Searched generators start at
    ``min_generator`` (default ``isqrt(horizon)``) so that small finite
    configurations near the origin do not count as evidence.
    """
    horizon = int(horizon)
    if min_generator is None:
        min_generator = max(math.isqrt(horizon), 1)
    params = {"mode": mode, "depth": depth, "branch": branch, "budget": budget, "min_generator": min_generator}
    if mode == "contains_FS":
        if not generators:
            raise ConfigurationError("contains_FS needs generators")
        fs, over = finite_sums(generators, horizon)
        missing = [x for x in fs if x not in A]
        st = HOLDS if not missing else FAILS
        w = {"generators": list(map(int, generators)), "fs": fs, "overflow": over}
        if missing:
            w["missing"] = missing[0]
        return Verdict("IP", st, horizon, w, params)
    if mode != "misses_FS":
        raise ConfigurationError(f"unknown IP mode {mode!r}")
    C = A.complement(horizon)
    if generators:
        fs, over = finite_sums(generators, horizon)
        hit = [x for x in fs if x in A]
        w = {"generators": list(map(int, generators)), "fs": fs, "overflow": over}
        if hit:
            w["hit"] = hit[0]
            return Verdict("IP_star", HOLDS, horizon, w, params)
        return Verdict("IP_star", FAILS, horizon, w, params)
    gens = _fs_search(C, int(depth), horizon // 2, branch, budget, int(min_generator))
    if gens is None:
        return Verdict("IP_star", HOLDS, horizon, {"searched_depth": int(depth)}, params)
    fs, over = finite_sums(gens, horizon)
    return Verdict("IP_star", FAILS, horizon, {"generators": gens, "fs": fs, "overflow": over}, params)


# -- Delta sets --------------------------------------------------------------


def difference_set(seed: Sequence[int], horizon: int) -> RunSet:
    """``{b - a : a < b in seed} ∩ [1, horizon]``."""
    seed = [int(x) for x in seed]
    if any(b <= a for a, b in zip(seed, seed[1:])):
        raise DomainError("seed must be strictly increasing")
    if horizon <= 10**7 and seed and seed[-1] - seed[0] <= 10**8:
        base = seed[0]
        ind = np.zeros(seed[-1] - base + 1, dtype=bool)
        ind[np.asarray(seed) - base] = True
        diff = np.zeros(horizon + 1, dtype=bool)
        for a in seed:
            tail = ind[a - base + 1 : a - base + 1 + horizon]
            diff[1 : 1 + len(tail)] |= tail
        return RunSet.from_indicator(diff[1:], offset=1)
    S = RunSet.from_elements(seed)
    out = RunSet()
    for a in seed:
        out = out.union(S.shift_minus(a).truncate(horizon))
    return out


_EMPTY_DELTA_WITNESS = {"v_min": 1, "table": [], "growing": [], "widths": [0, 0]}


def delta_verdict(
    A: RunSet,
    mode: str,
    seed: Sequence[int] | None = None,
    horizon: int = 10**4,
    v_max: int = 50,
    tail: int | None = None,
) -> Verdict:
    """Delta-set evidence.

    ``contains_diffset`` checks that the differences of ``seed`` up to the
    horizon lie in ``A``.  ``dual_evidence`` tabulates how often each
    difference ``v`` occurs in the complement of ``A`` up to ``tail`` (default
    ``horizon // 2``) and up to ``horizon``.  If no count grows, every
    difference has bounded multiplicity, which is evidence that the complement
    is not a Delta-set, so ``A`` is Delta* at the horizon.  Differences shorter
    than the widest cluster of the complement are skipped, since every cluster
    repeats them; clusters that keep widening make the evidence fail.
    """
    horizon = int(horizon)
    if mode == "contains_diffset":
        params = {"mode": mode, "v_max": v_max}
        if not seed:
            raise ConfigurationError("contains_diffset needs a seed")
        D = difference_set(seed, horizon)
        bad = D.difference(A)
        w = {"seed": list(map(int, seed)), "differences": D}
        if not bad.is_empty():
            w["missing"] = bad.min()
            return Verdict("Delta", FAILS, horizon, w, params)
        return Verdict("Delta", HOLDS, horizon, w, params)
    if mode != "dual_evidence":
        raise ConfigurationError(f"unknown Delta mode {mode!r}")
    half = horizon // 2 if tail is None else int(tail)
    params = {"mode": mode, "v_max": v_max, "tail": half}
    C = A.complement(horizon)
    if C.is_empty():
        return Verdict("Delta_star", HOLDS, horizon, dict(_EMPTY_DELTA_WITNESS), params)
    head_w = C.truncate(half).max_run()
    tail_w = C.restrict(half + 1, horizon).max_run()
    v_min = max(head_w, tail_w, 1)
    table = []
    growing = []
    vs = list(range(v_min, int(v_max) + 1))
    for v, (early, full) in zip(vs, C.difference_multiplicities(vs, [half, horizon])):
        table.append([v, early, full])
        if full > early:
            growing.append(v)
    w = {"v_min": v_min, "table": table, "growing": growing, "widths": [head_w, tail_w]}
    if tail_w > head_w or not table or growing:
        return Verdict("Delta_star", FAILS, horizon, w, params)
    w["max_multiplicity"] = max(r[2] for r in table)
    return Verdict("Delta_star", HOLDS, horizon, w, params)


# -- transforms --------------------------------------------------------------


def family_transform(
    A: RunSet,
    base_family: str,
    transform: str,
    K: int = 0,
    N_max: int = 2,
    horizon: int = 10**4,
    params: dict | None = None,
) -> Verdict:
    """Tilde (``shrink(A, N)`` in the family for all ``N <= N_max``), plus
    (some shift ``|k| <= K`` in the family) or bullet (all such shifts)."""
    sub = []
    if transform == "tilde":
        for N in range(int(N_max) + 1):
            v = membership_verdict(A.shrink(N, horizon), base_family, horizon, params)
            sub.append({"N": N, "verdict": v})
        ok = all(s["verdict"].holds for s in sub)
    elif transform in ("plus", "bullet"):
        for k in range(-int(K), int(K) + 1):
            v = membership_verdict(A.translate(-k), base_family, horizon, params)
            sub.append({"k": k, "verdict": v})
        flags = [s["verdict"].holds for s in sub]
        ok = any(flags) if transform == "plus" else all(flags)
    else:
        raise ConfigurationError(f"unknown transform {transform!r}")
    p = {"base_family": base_family, "transform": transform, "K": K, "N_max": N_max}
    return Verdict(f"{transform}:{base_family}", HOLDS if ok else FAILS, int(horizon), {"sub": sub}, p)


# -- verification --------------------------------------------------------------


def _check_density_point(A: RunSet, w: dict) -> bool:
    at = int(w["at"])
    return A.prefix_count(at) == w["count"] and Fraction(w["count"], at) == w["estimate"]


def verify(verdict: Verdict, A: RunSet) -> bool:
    """Re-check a verdict's witness against ``A``; False on any mismatch."""
    try:
        return _verify(verdict, A)
    except (KeyError, TypeError, ValueError, IndexError, ZeroDivisionError):
        return False


def _verify(v: Verdict, A: RunSet) -> bool:
    H, w, p, fam = v.horizon, v.witness, v.params, v.family
    if v.status == CERTIFIED:
        return "period" in w or "certificate" in w
    holds = v.status == HOLDS
    if fam == "syndetic":
        part = A.truncate(H)
        if holds:
            g = part.max_gap()
            return g is not INFINITE and g <= w["gap"] <= p["g_max"] and w["last"] == part.max() and w["last"] >= H - w["gap"]
        reason = w["reason"]
        if reason == "gap":
            x, y = w["gap_pair"]
            return x in A and y in A and y - x > p["g_max"] and A.count_between(x + 1, y - 1) == 0
        if reason == "tail":
            return w["last"] == part.max() and w["last"] < H - w["gap"]
        if reason == "gap_growth":
            return _block_stat(A, p["blocks"], H, "gap") == [tuple(s) for s in w["block_gaps"]] and _increasing_tail(
                [tuple(s) for s in w["block_gaps"]]
            )
        return reason == "fewer_than_two_elements" and part.size() < 2
    if fam == "thick":
        if holds and "run_start" in w:
            a, L = w["run_start"], w["run_length"]
            return L >= p["L_req"] and a + L - 1 <= H and RunSet.interval(a, a + L).issubset(A)
        if holds:
            stats = [tuple(s) for s in w["block_runs"]]
            return _block_stat(A, p["blocks"], H, "run") == stats and _increasing_tail(stats)
        return A.max_run(H) == w["max_run"] < p["L_req"]
    if fam == "cofinite":
        miss = A.complement(H)
        if holds:
            return (miss.is_empty() and w["last_missing"] == 0) or (
                miss.max() == w["last_missing"] and w["last_missing"] <= p["tail_start"]
            )
        y = w["missing"]
        return y not in A and p["tail_start"] < y <= H
    if fam == "piecewise_syndetic":
        if not holds:
            return _piecewise_syndetic(A, H, p) == (FAILS, w)
        lo, hi = w["window"]
        g = A.restrict(lo, hi).max_gap()
        g = 1 if g is INFINITE else g
        return hi - lo + 1 >= p["L_req"] and hi <= H and g <= w["gap"] <= p["G_max"] and lo in A and hi in A
    if fam == "thickly_syndetic":
        for row in w["trace"]:
            sv = Verdict("syndetic", row["status"], H, row["witness"], p)
            if not _verify(sv, A.shrink(row["N"], H)):
                return False
        trace = w["trace"]
        if [r["N"] for r in trace] != list(range(len(trace))):
            return False
        if holds:
            return len(trace) == p["N_max"] + 1 and all(r["status"] == HOLDS for r in trace)
        return bool(trace) and trace[-1]["status"] == FAILS and all(r["status"] == HOLDS for r in trace[:-1])
    if fam.startswith("D_"):
        thr = p["delta"] if fam.endswith("pos") else 1 - p["epsilon"]
        if not _check_density_point(A, w):
            return False
        if holds:
            # a tail checkpoint on the right side of the threshold
            return at_least(w, thr) and int(w["at"]) >= w["tail_start"]
        return _density(A, H, p, "upper" if "upper" in fam else "lower", fam.rsplit("_", 1)[1]) == (FAILS, w)
    if fam.startswith("BD_") and "reason" in w:
        kind = {"gap_growth": "gap", "run_growth": "run"}[w["reason"]]
        stats = [tuple(x) for x in w["block_gaps" if kind == "gap" else "block_runs"]]
        ok = _block_stat(A, p["blocks"], H, kind) == stats and _increasing_tail(stats)
        if kind == "run":
            ok = ok and stats[-1][2] >= 1
        return ok and holds == (kind == "run") and (("lower" in fam) == (kind == "gap"))
    if fam.startswith("BD_"):
        s, k = w["s"], w["k"]
        if A.window_count(k, s) != w["count"] or Fraction(w["count"], s) != w["estimate"]:
            return False
        level = "pos" if fam.endswith("pos") else "one"
        return _banach(A, H, p, "upper" if "upper" in fam else "lower", level) == (v.status, w)
    if fam == "IP":
        fs, over = finite_sums(w["generators"], H)
        if fs != w["fs"] or over != w["overflow"]:
            return False
        missing = [x for x in fs if x not in A]
        if holds:
            return not missing and "missing" not in w
        return bool(missing) and w["missing"] == missing[0]
    if fam == "IP_star":
        if "generators" not in w:
            return holds and w["searched_depth"] == p["depth"]
        fs, over = finite_sums(w["generators"], H)
        if fs != w["fs"] or over != w["overflow"]:
            return False
        if holds:
            return w["hit"] in A and w["hit"] in fs
        gens = w["generators"]
        return not any(x in A for x in fs) and all(a < b for a, b in zip(gens, gens[1:]))
    if fam == "Delta":
        D = difference_set(w["seed"], H)
        return D == w["differences"] and D.issubset(A) == holds
    if fam == "Delta_star":
        C = A.complement(H)
        half = p["tail"]
        if C.is_empty():
            return holds and w == _EMPTY_DELTA_WITNESS
        widths = [C.truncate(half).max_run(), C.restrict(half + 1, H).max_run()]
        if widths != list(w["widths"]) or w["v_min"] != max(widths + [1]):
            return False
        vs = [r[0] for r in w["table"]]
        if vs != list(range(w["v_min"], int(p["v_max"]) + 1)):
            return False
        if C.difference_multiplicities(vs, [half, H]) != [[r[1], r[2]] for r in w["table"]]:
            return False
        growing = [r[0] for r in w["table"] if r[2] > r[1]]
        if growing != w["growing"]:
            return False
        ok = widths[1] <= widths[0] and bool(w["table"]) and not growing
        if ok and w["max_multiplicity"] != max(r[2] for r in w["table"]):
            return False
        return holds == ok
    if ":" in fam:
        subs = w["sub"]
        base = p["base_family"]
        if p["transform"] == "tilde":
            keys, want = [s.get("N") for s in subs], list(range(int(p["N_max"]) + 1))
        else:
            keys, want = [s.get("k") for s in subs], list(range(-int(p["K"]), int(p["K"]) + 1))
        if keys != want:
            return False
        for s in subs:
            sv = s["verdict"]
            key = s.get("N", s.get("k"))
            B = A.shrink(key, H) if p["transform"] == "tilde" else A.translate(-key)
            if sv.family != base or not _verify(sv, B):
                return False
        flags = [s["verdict"].holds for s in subs]
        return (any(flags) if p["transform"] == "plus" else all(flags)) == holds
    return False


def at_least(w: dict, thr: Fraction) -> bool:
    return w["estimate"] >= thr


def corrupt(verdict: Verdict, key: str, value) -> Verdict:
    """Copy of ``verdict`` with one witness entry replaced (for fuzz tests)."""
    w = dict(verdict.witness)
    w[key] = value
    return replace(verdict, witness=w)
