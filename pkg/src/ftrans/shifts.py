"""Dyadic weight sequences, their exponent profiles and return-time sets.

Every weight is ``w_i = 2**e_i``.  A :class:`WeightSpec` stores the exponents
as segments ``(length, delta)``: ``length`` consecutive weights equal to
``2**delta``.  Right-hand segments address indices ``1, 2, 3, ...``; bilateral
specs also carry left-hand segments for indices ``0, -1, -2, ...``.

The exponent profile is ``E(p) = e_1 + ... + e_p`` for ``p >= 0`` and
``E(p) = -(e_{p+1} + ... + e_0)`` for ``p < 0``, so that the product of the
weights over ``(a, b]`` is ``2**(E(b) - E(a))`` on either side.  With
``M = 2**t``:

* ``n`` is in the forward set iff ``E(j+n) - E(j) >= t + 1``;
* ``n`` is in the backward set iff ``E(j-n) - E(j) >= t + 1``.

Both sets are computed per linear piece of ``E`` by threshold arithmetic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .families import (
    CERTIFIED,
    FAILS,
    HOLDS,
    Verdict,
    default_params,
    delta_verdict,
    ip_verdict,
    membership_verdict,
    tail_start,
    verify,
)
from .intset import RunSet, _pack

CONSTRUCTIONS = (
    "p41_1",
    "p41_2",
    "p41_3",
    "bd1_nonmixing",
    "p44_ruler",
    "p52_ip",
    "p54_delta",
    "p58_rhc",
)
EXTRA_CONSTRUCTIONS = ("constant", "explicit", "mirror")

CLASSES = (
    "transitive",
    "mixing",
    "weakly_mixing",
    "topologically_ergodic",
    "D_upper",
    "D_lower",
    "BD_upper",
    "D_upper_1",
    "D_lower_1",
    "BD_lower_1",
    "delta_star",
    "ip_star",
)

CLASS_FAMILY = {
    "mixing": "cofinite",
    "weakly_mixing": "thick",
    "topologically_ergodic": "syndetic",
    "D_upper": "D_upper_pos",
    "D_lower": "D_lower_pos",
    "BD_upper": "BD_upper_pos",
    "D_upper_1": "D_upper_1",
    "D_lower_1": "D_lower_1",
    "BD_lower_1": "BD_lower_1",
}

__all__ = [
    "CLASSES",
    "CONSTRUCTIONS",
    "ClassifyConfig",
    "ExponentProfile",
    "ReturnTimeSets",
    "WeightSpec",
    "classify_shift",
    "compile_exponent_profile",
    "floor_log2",
    "generate_weight",
    "power_product_check",
    "return_time_sets",
    "salas_check",
    "verify_classification",
]

DEFAULT_HORIZON = 10**6
_MARGIN = 1024
_MAX_UNROLL = 10**7


def floor_log2(q) -> int:
    """``floor(log2(q))`` for a positive int or Fraction, exactly."""
    q = Fraction(q)
    if q <= 0:
        raise DomainError("log2 of a non-positive number")
    k = q.numerator.bit_length() - q.denominator.bit_length()
    # now 2**(k-1) < q < 2**(k+1)
    if Fraction(2) ** k > q:
        k -= 1
    return k


def threshold_exponent(M) -> int:
    """The ``t`` with ``2**E > M  <=>  E >= t + 1`` for integer ``E``."""
    return floor_log2(M)


# -- weight specifications ---------------------------------------------------


@dataclass(eq=False)
class WeightSpec:
    """Segment program of dyadic weight exponents.

    ``lengths``/``deltas`` cover indices ``1..span``; when ``cycle_from`` is
    set, segments from that index on repeat forever.  The ``left_*`` fields
    play the same role for indices ``0, -1, -2, ...`` on bilateral specs.
    """

    kind: str
    name: str
    params: dict
    lengths: np.ndarray
    deltas: np.ndarray
    block_starts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    cycle_from: int | None = None
    left_lengths: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    left_deltas: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    left_cycle_from: int | None = None
    checkpoints: tuple = ()
    min_horizon: int = 0

    def __post_init__(self):
        if self.kind not in ("unilateral", "bilateral"):
            raise ConfigurationError(f"kind must be unilateral or bilateral, not {self.kind!r}")
        self.lengths = _pack(np.asarray(self.lengths))
        self.deltas = _pack(np.asarray(self.deltas))
        self.left_lengths = _pack(np.asarray(self.left_lengths))
        self.left_deltas = _pack(np.asarray(self.left_deltas))
        if len(self.lengths) != len(self.deltas) or len(self.left_lengths) != len(self.left_deltas):
            raise ConfigurationError("lengths and deltas differ in size")
        if len(self.lengths) and min(self.lengths) < 1:
            raise ConfigurationError("segment lengths must be >= 1")
        if self.kind == "bilateral" and len(self.left_lengths) == 0:
            raise ConfigurationError("bilateral spec needs a left program")
        self.block_starts = np.asarray(self.block_starts, dtype=np.int64)
        if len(self.block_starts) == 0:
            self.block_starts = np.arange(len(self.lengths), dtype=np.int64)

    @property
    def span(self) -> int:
        return int(sum(self.lengths.tolist()))

    @property
    def left_span(self) -> int:
        return int(sum(self.left_lengths.tolist()))

    @property
    def periodic(self) -> bool:
        if self.cycle_from is None:
            return False
        return self.kind == "unilateral" or self.left_cycle_from is not None

    def drift(self) -> tuple[int | None, int | None]:
        """Exponent sum over one period on each side (None if not periodic)."""
        right = left = None
        if self.cycle_from is not None:
            c = self.cycle_from
            right = int(sum((self.lengths[c:] * self.deltas[c:]).tolist()))
        if self.left_cycle_from is not None:
            c = self.left_cycle_from
            left = int(sum((self.left_lengths[c:] * self.left_deltas[c:]).tolist()))
        return right, left

    @property
    def program(self) -> list[list[tuple[int, int]]]:
        """Right-hand segments grouped into blocks."""
        return _blocks(self.lengths, self.deltas, self.block_starts)

    def exponents(self, n: int) -> list[int]:
        """``[e_1, ..., e_n]`` expanded element-wise (for small n)."""
        lens, dels = _extend(self.lengths, self.deltas, self.cycle_from, n)
        out: list[int] = []
        for L, d in zip(lens.tolist(), dels.tolist()):
            out.extend([d] * min(L, n - len(out)))
            if len(out) >= n:
                break
        if len(out) < n:
            raise ConfigurationError(f"program covers only {len(out)} weights")
        return out

    def left_exponents(self, n: int) -> list[int]:
        """``[e_0, e_{-1}, ..., e_{1-n}]`` for bilateral specs."""
        lens, dels = _extend(self.left_lengths, self.left_deltas, self.left_cycle_from, n)
        out: list[int] = []
        for L, d in zip(lens.tolist(), dels.tolist()):
            out.extend([d] * min(L, n - len(out)))
            if len(out) >= n:
                break
        if len(out) < n:
            raise ConfigurationError(f"left program covers only {len(out)} weights")
        return out

    def to_json_obj(self) -> dict:
        obj = {
            "kind": self.kind,
            "name": self.name,
            "params": {k: _param_json(v) for k, v in self.params.items()},
            "program": [[[str(L), str(d)] for L, d in blk] for blk in self.program],
            "cycle_from": None if self.cycle_from is None else str(self.cycle_from),
            "checkpoints": [str(c) for c in self.checkpoints],
            "min_horizon": str(self.min_horizon),
        }
        if self.kind == "bilateral":
            obj["left_program"] = [[str(L), str(d)] for L, d in zip(self.left_lengths.tolist(), self.left_deltas.tolist())]
            obj["left_cycle_from"] = None if self.left_cycle_from is None else str(self.left_cycle_from)
        return obj

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "WeightSpec":
        lens, dels, starts = [], [], []
        for blk in obj["program"]:
            starts.append(len(lens))
            for L, d in blk:
                lens.append(int(L))
                dels.append(int(d))
        left = obj.get("left_program", [])
        cf = obj.get("cycle_from")
        lcf = obj.get("left_cycle_from")
        return cls(
            kind=obj["kind"],
            name=obj["name"],
            params=dict(obj.get("params", {})),
            lengths=_pack(lens),
            deltas=_pack(dels),
            block_starts=np.asarray(starts, dtype=np.int64),
            cycle_from=None if cf is None else int(cf),
            left_lengths=_pack([int(L) for L, _ in left]),
            left_deltas=_pack([int(d) for _, d in left]),
            left_cycle_from=None if lcf is None else int(lcf),
            checkpoints=tuple(int(c) for c in obj.get("checkpoints", [])),
            min_horizon=int(obj.get("min_horizon", 0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "WeightSpec":
        return cls.from_json_obj(json.loads(text))


def _param_json(v):
    if isinstance(v, bool) or v is None or isinstance(v, (str, float)):
        return v
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_param_json(x) for x in v]
    if isinstance(v, dict):
        return {k: _param_json(x) for k, x in v.items()}
    return str(v)


def _blocks(lengths, deltas, block_starts) -> list[list[tuple[int, int]]]:
    L = lengths.tolist()
    D = deltas.tolist()
    cuts = list(block_starts.tolist()) + [len(L)]
    return [list(zip(L[a:b], D[a:b])) for a, b in zip(cuts, cuts[1:]) if b > a]


def _extend(lengths, deltas, cycle_from, need: int):
    """Repeat the periodic tail until the program covers ``need`` indices."""
    span = int(sum(lengths.tolist()))
    if span >= need or cycle_from is None:
        return lengths, deltas
    cyc_l = lengths[cycle_from:]
    cyc_d = deltas[cycle_from:]
    period = int(sum(cyc_l.tolist()))
    reps = -(-(need - span) // period)
    if len(set(cyc_d.tolist())) == 1:
        # a constant cycle unrolls into one segment of any length
        return (
            _pack(np.concatenate([_pack(lengths.tolist()), _pack([reps * period])])),
            _pack(np.concatenate([_pack(deltas.tolist()), _pack(cyc_d[:1].tolist())])),
        )
    if reps * len(cyc_l) > _MAX_UNROLL:
        raise ConfigurationError(f"periodic program would unroll into {reps * len(cyc_l)} segments")
    return (
        _pack(np.concatenate([lengths, np.tile(cyc_l, reps)])),
        _pack(np.concatenate([deltas, np.tile(cyc_d, reps)])),
    )


# -- constructions -----------------------------------------------------------


def _interleave(*cols: np.ndarray) -> np.ndarray:
    """Interleave equally long arrays column-wise."""
    arrs = [_pack(np.asarray(c)) for c in cols]
    dtype = object if any(a.dtype == object for a in arrs) else np.int64
    out = np.empty(len(arrs[0]) * len(arrs), dtype=dtype)
    for i, a in enumerate(arrs):
        out[i :: len(arrs)] = a
    return out


def reset_program(B: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Weights 2 everywhere except ``w_b = 2**-(b - b_prev - 1)`` at each b in B.

    The profile then climbs by one between consecutive elements of B and is
    back at 0 exactly on B.
    """
    b = _pack(np.asarray(B))
    prev = np.concatenate((np.zeros(1, dtype=b.dtype), b[:-1]))
    g = b - prev - 1
    lens = _interleave(g, np.ones_like(g))
    dels = _interleave(np.ones_like(g), -g)
    keep = lens > 0
    return _pack(lens[keep]), _pack(dels[keep])


def ip_base_set(limit: int, base: int = 4) -> list[int]:
    """Finite sums of distinct powers ``base**n`` (n >= 1) up to ``limit``."""
    powers = []
    p = base
    while p <= limit:
        powers.append(p)
        p *= base
    sums = [0]
    for q in powers:
        sums = sums + [s + q for s in sums]
    return sorted(s for s in sums if 0 < s <= limit)


def delta_base_set(limit: int) -> list[int]:
    """``b_1 = 2, b_{i+1} = b_i + i + 2`` up to and including the first term > limit."""
    out = [2]
    i = 1
    while out[-1] <= limit:
        out.append(out[-1] + i + 2)
        i += 1
    return out


def rhc_set(limit: int) -> RunSet:
    """Union over j, l >= 1 of the open intervals ``(l*10**j - j, l*10**j + j)`` up to ``limit``."""
    starts, ends = [], []
    j = 1
    while 10**j - j < limit:
        step = 10**j
        ls = np.arange(1, (limit + j) // step + 2, dtype=np.int64)
        starts.append(ls * step - j + 1)
        ends.append(ls * step + j)
        j += 1
    if not starts:
        return RunSet()
    return RunSet._from_pieces(np.concatenate(starts), np.concatenate(ends))


def _nu2(i: np.ndarray) -> np.ndarray:
    low = i & -i
    return np.log2(low).astype(np.int64)


def ruler_sizes(n: int) -> tuple[int, int]:
    """Length of the n-th doubled ruler block and its number of zeros of ``E``, in closed form."""
    return 3 * 2**n - n - 3, 2**n - 1


def _gen_bd1(need: int, params: dict) -> dict:
    lens = [1]
    dels = [0]
    starts = [0]
    pos, n = 1, 1
    ends = [1]
    while pos < need:
        starts.append(len(lens))
        lens += [n, 1]
        dels += [1, -n]
        pos += n + 1
        ends.append(pos)
        n += 1
    return dict(lengths=lens, deltas=dels, block_starts=starts, checkpoints=tuple(ends))


def _gen_p41_1(need: int, params: dict) -> dict:
    depth = int(params.get("depth", 10))
    base = int(params.get("m_base", 10))
    lens, dels, starts, cps = [], [], [], []
    pos, k = 0, 0
    while k <= depth + 1 or pos < need:
        m = base**k
        starts.append(len(lens))
        lens += [m, k + 1, 1]
        dels += [0, 1, -(k + 1)]
        pos += m + k + 2
        cps.append(pos)
        k += 1
    return dict(lengths=lens, deltas=dels, block_starts=starts, checkpoints=tuple(cps), min_horizon=cps[depth])


def _p41_2_sizes(k: int) -> tuple[int, int]:
    a = 10 ** (2 ** (2 * k + 1))
    b = 10 ** (2 ** (2 * k + 2))
    c = 10 ** (2 ** (2 * k + 3))
    return b - a, c - b


def _gen_p41_2(need: int, params: dict) -> dict:
    depth = int(params.get("depth", 2))
    lens, dels, starts, cps = [], [], [], []
    pos, k, prev_n = 0, 0, 0
    while k <= depth + 1 or pos < need:
        m, n = _p41_2_sizes(k)
        starts.append(len(lens))
        if k == 0:
            lens += [m, n]
            dels += [0, 1]
        else:
            # the reset weight 2**-n_{k-1} is the first of the m_k entries
            lens += [1, m - 1, n]
            dels += [-prev_n, 0, 1]
        pos += m
        cps.append(pos)
        pos += n
        cps.append(pos)
        prev_n = n
        k += 1
    # evaluate through the long run of ones after the last configured block,
    # where both the upper and the lower density extremes are visible
    return dict(lengths=lens, deltas=dels, block_starts=starts, checkpoints=tuple(cps), min_horizon=cps[2 * depth + 2])


def _gen_p41_3(need: int, params: dict) -> dict:
    depth = int(params.get("depth", 5))
    lens, dels, starts, cps = [1, 1, 1], [0, 1, -1], [0], [3]
    pos, k = 3, 0
    while k <= depth + 1 or pos < need:
        m = 10 ** (2**k)
        starts.append(len(lens))
        lens += [k + 2, m, 1]
        dels += [0, 1, -m]
        pos += k + 3 + m
        cps.append(pos)
        k += 1
    return dict(lengths=lens, deltas=dels, block_starts=starts, checkpoints=tuple(cps), min_horizon=cps[depth + 1])


def _gen_ruler(need: int, params: dict) -> dict:
    depth = params.get("depth")
    n = 1
    if depth is not None:
        n = int(depth)
    while ruler_sizes(n)[0] < need:
        n += 1
    i = np.arange(1, 2**n, dtype=np.int64)
    k = _nu2(i) + 1
    # block i is k twos then 2**-k, with k - 1 the 2-adic valuation of i; keep only the blocks needed
    cover = max(need, ruler_sizes(int(depth))[0] if depth is not None else 0)
    k = k[: int(np.searchsorted(np.cumsum(k + 1), cover)) + 1]
    lens = _interleave(k, np.ones_like(k))
    dels = _interleave(np.ones_like(k), -k)
    starts = np.arange(0, len(lens), 2, dtype=np.int64)
    span = int((k + 1).sum())
    cps = tuple(ruler_sizes(m)[0] for m in range(1, n + 1) if ruler_sizes(m)[0] <= span)
    return dict(lengths=lens, deltas=dels, block_starts=starts, checkpoints=cps)


def _gen_reset(B: list[int], need: int, checkpoints=()) -> dict:
    lens, dels = reset_program(B)
    return dict(lengths=lens, deltas=dels, checkpoints=tuple(checkpoints))


def _gen_p52(need: int, params: dict) -> dict:
    base = int(params.get("base", 4))
    limit = base
    while limit < need:
        limit *= base
    B = ip_base_set(limit * base, base)
    cps = []
    p = base
    while p <= limit:
        cps.append(p)
        p *= base
    return _gen_reset(B, need, cps)


def _gen_p54(need: int, params: dict) -> dict:
    B = delta_base_set(need)
    return _gen_reset(B, need, [B[2**k] for k in range(1, len(B).bit_length()) if 2**k < len(B)])


def _gen_p58(need: int, params: dict) -> dict:
    S = rhc_set(need + 64)
    a, b = S.starts, S.ends
    prev = np.concatenate((np.zeros(1, dtype=b.dtype), b[:-1]))
    zeros = a - 1 - prev
    run = b - a
    lens = _interleave(zeros, run, np.ones_like(run))
    dels = _interleave(np.zeros_like(run), np.ones_like(run), -run)
    keep = lens > 0
    cps = []
    p = 10
    while p <= need:
        cps.append(p)
        p *= 10
    return dict(lengths=lens[keep], deltas=dels[keep], checkpoints=tuple(cps))


def _gen_constant(need: int, params: dict) -> dict:
    e = int(params.get("exponent", 1))
    out = dict(lengths=[1], deltas=[e], cycle_from=0)
    if params.get("kind", "unilateral") == "bilateral":
        out.update(left_lengths=[1], left_deltas=[e], left_cycle_from=0)
    return out


def _gen_explicit(need: int, params: dict) -> dict:
    segs = [(int(L), int(d)) for L, d in params["segments"]]
    out = dict(lengths=[L for L, _ in segs], deltas=[d for _, d in segs])
    if params.get("repeat", False):
        out["cycle_from"] = 0
    if params.get("kind", "unilateral") == "bilateral":
        left = [(int(L), int(d)) for L, d in params["left_segments"]]
        out.update(left_lengths=[L for L, _ in left], left_deltas=[d for _, d in left])
        if params.get("repeat", False):
            out["left_cycle_from"] = 0
    return out


_GENERATORS: dict[str, Callable[[int, dict], dict]] = {
    "bd1_nonmixing": _gen_bd1,
    "p41_1": _gen_p41_1,
    "p41_2": _gen_p41_2,
    "p41_3": _gen_p41_3,
    "p44_ruler": _gen_ruler,
    "p52_ip": _gen_p52,
    "p54_delta": _gen_p54,
    "p58_rhc": _gen_p58,
    "constant": _gen_constant,
    "explicit": _gen_explicit,
}


def generate_weight(construction: str, params: dict | None = None) -> WeightSpec:
    """Build the segment program of a named construction.

    ``params["horizon"]`` (default 10**6) is the number of right-hand indices
    the program must cover; lacunary constructions cover at least their
    ``depth`` blocks regardless.  ``mirror`` wraps another construction into a
    bilateral spec with ``w_{1-i} = 1 / w_i``.
    """
    params = dict(params or {})
    horizon = int(params.get("horizon", DEFAULT_HORIZON))
    need = horizon + _MARGIN
    if construction == "mirror":
        inner = dict(params)
        base = inner.pop("base", "bd1_nonmixing")
        w = generate_weight(base, inner)
        if w.kind != "unilateral":
            raise ConfigurationError("mirror needs a unilateral base")
        return WeightSpec(
            kind="bilateral",
            name=f"mirror:{base}",
            params=params,
            lengths=w.lengths,
            deltas=w.deltas,
            block_starts=w.block_starts,
            cycle_from=w.cycle_from,
            left_lengths=w.lengths,
            left_deltas=-w.deltas,
            left_cycle_from=w.cycle_from,
            checkpoints=w.checkpoints,
            min_horizon=w.min_horizon,
        )
    if construction not in _GENERATORS:
        raise ConfigurationError(
            f"unknown construction {construction!r}; expected one of {CONSTRUCTIONS + EXTRA_CONSTRUCTIONS}"
        )
    kw = _GENERATORS[construction](need, params)
    kind = "bilateral" if "left_lengths" in kw else "unilateral"
    return WeightSpec(kind=kind, name=construction, params=params, **kw)


# -- exponent profile ----------------------------------------------------------


@dataclass(eq=False)
class ExponentProfile:
    """Piecewise linear ``E`` on ``[pos[0], pos[-1]]``.

    Piece ``i`` covers positions ``pos[i] < p <= pos[i+1]`` where
    ``E(p) = val[i] + slope[i] * (p - pos[i])``; ``E(0) = 0``.
    """

    pos: np.ndarray
    val: np.ndarray
    slope: np.ndarray
    kind: str
    block_boundaries: tuple = ()
    spec: WeightSpec | None = None

    @property
    def right(self) -> int:
        return int(self.pos[-1])

    @property
    def left(self) -> int:
        return int(self.pos[0])

    @property
    def segments(self) -> list[tuple[int, int]]:
        lens = (self.pos[1:] - self.pos[:-1]).tolist()
        return list(zip(lens, self.slope.tolist()))

    def _check(self, lo, hi):
        if lo < self.left or hi > self.right:
            raise ConfigurationError(
                f"profile covers [{self.left}, {self.right}], asked for [{lo}, {hi}]; compile with a larger horizon"
            )

    def E(self, p):
        """Exact ``E`` at an int or an integer array."""
        scalar = np.ndim(p) == 0
        q = _pack([int(p)]) if scalar else _pack(np.asarray(p))
        if len(q):
            self._check(min(q), max(q))
        pos, val, slope = self.pos, self.val, self.slope
        if q.dtype == object or pos.dtype == object or val.dtype == object:
            pos, val, slope, q = (x.astype(object) for x in (pos, val, slope, q))
        i = np.searchsorted(pos, q, side="left") - 1
        i = np.clip(i, 0, len(slope) - 1)
        out = val[i] + slope[i] * (q - pos[i])
        return int(out[0]) if scalar else out

    def superlevel(self, c: int, lo: int, hi: int) -> RunSet:
        """Positions ``lo <= p <= hi`` with ``E(p) >= c``, shifted by ``1 - lo``.

        The result is returned as a RunSet of ``p - lo + 1`` so that it lives in
        the positive integers even for negative positions.
        """
        lo, hi = int(lo), int(hi)
        if hi < lo:
            return RunSet()
        self._check(lo, hi)
        i0 = max(int(np.searchsorted(self.pos, lo, side="left")) - 1, 0)
        i1 = min(max(int(np.searchsorted(self.pos, hi, side="left")), i0 + 1), len(self.slope))
        p0 = self.pos[i0:i1]
        p1 = self.pos[i0 + 1 : i1 + 1]
        v0 = self.val[i0:i1]
        s = self.slope[i0:i1]
        wide = any(x.dtype == object for x in (p0, v0, s)) or max(abs(c), abs(lo), abs(hi)) >= 1 << 61
        if wide:
            p0, p1, v0, s = (x.astype(object) for x in (p0, p1, v0, s))
        need = c - v0
        a = p0 + 1
        if i0 == 0:
            a[0] = p0[0]  # the left end of the domain is a position too
        b = p1
        # one division serves both signs: with q = floor(-need / |s|), rising
        # pieces reach the level from p0 - q on, falling ones stay on it up to p0 + q
        q = (-need) // np.where(s == 0, 1, np.abs(s))
        a = np.where(s > 0, np.maximum(a, p0 - q), a)
        b = np.where(s < 0, np.minimum(b, p0 + q), b)
        b = np.where((s == 0) & (v0 < c), a - 1, b)
        a = np.maximum(a, lo)
        b = np.minimum(b, hi)
        keep = b >= a
        off = 1 - lo
        return RunSet._from_pieces(a[keep] + off, b[keep] + 1 + off)

    def forward_set(self, t: int, j: int, horizon: int) -> RunSet:
        """``{1 <= n <= horizon : E(j+n) - E(j) >= t+1}``."""
        c = self.E(j) + t + 1
        return self.superlevel(c, j + 1, j + horizon)

    def backward_set(self, t: int, j: int, horizon: int) -> RunSet:
        """``{1 <= n <= horizon : E(j-n) - E(j) >= t+1}``, truncated at ``j - n >= left``."""
        c = self.E(j) + t + 1
        lo = max(j - horizon, self.left)
        raw = self.superlevel(c, lo, j - 1)  # element r stands for p = r + lo - 1
        # n = j - p = j - lo + 1 - r: reflect
        top = j - lo + 1
        if raw.is_empty():
            return raw
        s, e = raw.starts, raw.ends
        return RunSet._from_pieces(top - (e - 1), top - s + 1)

    def level_positions(self, value: int, lo: int, hi: int) -> RunSet:
        """Positions ``lo <= p <= hi`` (assumed >= 1) with ``E(p) == value``."""
        off = lo - 1
        at_least = self.superlevel(value, lo, hi)
        above = self.superlevel(value + 1, lo, hi)
        return at_least.difference(above).translate(off)

    def max_E(self, lo: int, hi: int) -> int:
        """Maximum of ``E`` over ``[lo, hi]`` (attained at a knot or endpoint)."""
        self._check(lo, hi)
        inside = self.pos[(self.pos >= lo) & (self.pos <= hi)]
        pts = _pack(np.concatenate((_pack([lo, hi]), inside)))
        return int(max(self.E(pts).tolist()))


def compile_exponent_profile(w: WeightSpec, horizon: int, left_horizon: int | None = None) -> ExponentProfile:
    """Knot representation of ``E`` on ``[-left_horizon, horizon]`` (left part bilateral only)."""
    horizon = int(horizon)
    lens, dels = _extend(w.lengths, w.deltas, w.cycle_from, horizon)
    span = int(sum(lens.tolist()))
    if span < horizon:
        raise ConfigurationError(f"program covers {span} indices, horizon {horizon} requested")
    if w.kind == "bilateral":
        lh = horizon if left_horizon is None else int(left_horizon)
        llens, ldels = _extend(w.left_lengths, w.left_deltas, w.left_cycle_from, lh)
        if int(sum(llens.tolist())) < lh:
            raise ConfigurationError(f"left program too short for {lh} indices")
    else:
        llens, ldels = _pack([]), _pack([])
    # right side knots
    rpos = np.concatenate((np.zeros(1, dtype=lens.dtype), np.cumsum(lens)))
    rval = np.concatenate((np.zeros(1, dtype=lens.dtype), np.cumsum(lens * dels)))
    if len(llens):
        # left pieces, read right-to-left: E(-p) = -(e_0 + ... + e_{1-p})
        lpos = -np.cumsum(llens)[::-1]
        lval = -np.cumsum(llens * ldels)[::-1]
        pos = np.concatenate((lpos, rpos))
        val = np.concatenate((lval, rval))
        slope = np.concatenate((ldels[::-1], dels))
    else:
        pos, val, slope = rpos, rval, dels
    bb = tuple(c for c in w.checkpoints if c <= span)
    return ExponentProfile(_pack(pos), _pack(val), _pack(slope), w.kind, bb, w)


# -- return-time sets ----------------------------------------------------------


class ReturnTimeSets:
    """``(forward, backward)`` pair; ``backward_defined`` is False on unilateral specs."""

    __slots__ = ("forward", "backward", "backward_defined")

    def __init__(self, forward: RunSet, backward: RunSet, backward_defined: bool):
        self.forward = forward
        self.backward = backward
        self.backward_defined = backward_defined

    def __iter__(self) -> Iterator[RunSet]:
        yield self.forward
        yield self.backward

    def both(self) -> RunSet:
        if not self.backward_defined:
            return self.forward
        return self.forward.intersect(self.backward)


def _as_profile(w, horizon: int, j: int = 0) -> ExponentProfile:
    if isinstance(w, ExponentProfile):
        return w
    return compile_exponent_profile(w, int(horizon) + abs(int(j)) + 1)


def return_time_sets(w, t: int, j: int, horizon: int) -> ReturnTimeSets:
    """Forward and backward return-time sets for ``M = 2**t`` at offset ``j``."""
    prof = _as_profile(w, horizon, j)
    if prof.kind == "unilateral" and j < 0:
        raise DomainError("unilateral shifts have no negative offsets")
    fwd = prof.forward_set(t, j, horizon)
    if prof.kind == "unilateral":
        return ReturnTimeSets(fwd, RunSet(), False)
    return ReturnTimeSets(fwd, prof.backward_set(t, j, horizon), True)


def salas_check(w, t: int, N: int, horizon: int) -> Verdict:
    """Hypercyclicity evidence at level ``2**t``.

    Bilateral: the intersection over ``|j| <= N`` of forward and backward
    sets is non-empty.  Unilateral: ``E`` exceeds ``t`` somewhere up to the
    horizon (the partial products are unbounded).
    """
    prof = _as_profile(w, horizon, N)
    params = {"t": t, "N": N}
    if prof.kind == "unilateral":
        fwd = prof.forward_set(t, 0, horizon)
        if fwd.is_empty():
            return Verdict("salas", FAILS, horizon, {"max_E": prof.max_E(1, horizon)}, params)
        return Verdict("salas", HOLDS, horizon, {"n": fwd.min()}, params)
    acc = None
    for j in range(-N, N + 1):
        both = return_time_sets(prof, t, j, horizon).both()
        acc = both if acc is None else acc.intersect(both)
        if acc.is_empty():
            return Verdict("salas", FAILS, horizon, {"empty_at_j": j}, params)
    return Verdict("salas", HOLDS, horizon, {"n": acc.min()}, params)


# -- classification --------------------------------------------------------------


@dataclass(frozen=True)
class ClassifyConfig:
    t_grid: tuple = (0, 1, 2)
    j_grid: tuple = (0, 1, 2)
    epsilon: Fraction = Fraction(1, 10)
    delta: Fraction = Fraction(1, 100)
    ip_depth: int = 4
    v_max: int = 50
    N_max: int = 2
    use_blocks: bool = True
    classes: tuple = CLASSES

    def minimal_horizon(self) -> int:
        return max(64, 8 * (max(self.t_grid) + 1) + 4 * max(abs(j) for j in self.j_grid))


def effective_horizon(w: WeightSpec, horizon: int) -> int:
    """Lacunary constructions are evaluated through their last configured block."""
    return max(int(horizon), int(w.min_horizon))


class _Context:
    """Compiled profile plus memoized return-time sets for one classification."""

    def __init__(self, w: WeightSpec, horizon: int, config: ClassifyConfig):
        self.w = w
        self.H = effective_horizon(w, horizon)
        self.config = config
        jmax = max(abs(j) for j in config.j_grid)
        self.prof = compile_exponent_profile(w, self.H + jmax + 1, self.H + jmax + 1)
        self._cache: dict = {}

    def A(self, t: int, j: int) -> RunSet:
        key = (t, j)
        if key not in self._cache:
            rs = return_time_sets(self.prof, t, j, self.H)
            self._cache[key] = rs.both()
        return self._cache[key]

    def family_params(self, scale: int = 1) -> dict:
        c = self.config
        p = {"epsilon": c.epsilon, "delta": c.delta, "N_max": c.N_max}
        if c.use_blocks and self.prof.block_boundaries:
            p["blocks"] = [b // scale for b in self.prof.block_boundaries if b <= self.H]
            # runs long relative to where the tail starts; sqrt(H) would ask a
            # lacunary run to outgrow the whole next block
            p["L_req"] = max(math.isqrt(tail_start(self.H // scale, p["blocks"])), 1)
        return p


def _certified(w: WeightSpec, cls: str, horizon: int = 0) -> Verdict | None:
    if not w.periodic:
        return None
    right, left = w.drift()
    ok = right > 0 and (w.kind == "unilateral" or left < 0)
    # positive drift on both sides makes every return-time set cofinite;
    # otherwise the partial products stay bounded on one side
    w_ = {"certificate": "periodic drift", "right_drift": right, "left_drift": left}
    return Verdict(cls, CERTIFIED if ok else FAILS, horizon, w_, {"rule": "periodic drift"})


def _class_verdict(
    ctx: _Context, cls: str, transform: Callable[[RunSet], RunSet] | None = None, scale: int = 1
) -> Verdict:
    cfg = ctx.config
    H = ctx.H // scale
    tf = transform or (lambda A: A)
    bilateral = ctx.prof.kind == "bilateral"
    sub = []
    if cls == "transitive":
        if bilateral:
            N = max(abs(j) for j in cfg.j_grid)
            for t in cfg.t_grid:
                acc = None
                for j in range(-N, N + 1):
                    acc = ctx.A(t, j) if acc is None else acc.intersect(ctx.A(t, j))
                acc = tf(acc)
                ok = not acc.is_empty()
                sub.append({"t": t, "N": N, "holds": ok, "n": acc.min() if ok else None})
        else:
            for t in cfg.t_grid:
                A = tf(ctx.A(t, 0)).truncate(H)
                ok = not A.is_empty()
                sub.append({"t": t, "holds": ok, "n": A.min() if ok else None})
        holds = all(s["holds"] for s in sub)
        return Verdict(cls, HOLDS if holds else FAILS, H, {"sub": sub}, {"t_grid": list(cfg.t_grid)})
    js = list(cfg.j_grid) if (bilateral or cls in ("delta_star", "ip_star")) else [0]
    for t in cfg.t_grid:
        for j in js:
            A = tf(ctx.A(t, j)).truncate(H)
            if cls == "delta_star":
                fp = ctx.family_params(scale)
                v = delta_verdict(A, "dual_evidence", horizon=H, v_max=cfg.v_max, tail=tail_start(H, fp.get("blocks")))
            elif cls == "ip_star":
                v = ip_verdict(A, "misses_FS", depth=cfg.ip_depth, horizon=H)
            else:
                v = membership_verdict(A, CLASS_FAMILY[cls], H, ctx.family_params(scale))
            sub.append({"t": t, "j": j, "verdict": v})
    holds = all(s["verdict"].holds for s in sub)
    return Verdict(
        cls, HOLDS if holds else FAILS, H, {"sub": sub}, {"t_grid": list(cfg.t_grid), "j_grid": js}
    )


def classify_shift(w: WeightSpec, horizon: int = DEFAULT_HORIZON, config: ClassifyConfig | None = None) -> dict:
    """Per-class verdicts for the weighted backward shift of ``w``."""
    config = config or ClassifyConfig()
    if int(horizon) < config.minimal_horizon():
        raise ConfigurationError(f"horizon {horizon} too small; need at least {config.minimal_horizon()}")
    unknown = set(config.classes) - set(CLASSES)
    if unknown:
        raise ConfigurationError(f"unknown classes {sorted(unknown)}")
    out = {}
    if w.periodic:
        for cls in config.classes:
            out[cls] = _certified(w, cls, int(horizon))
        return out
    ctx = _Context(w, horizon, config)
    for cls in config.classes:
        out[cls] = _class_verdict(ctx, cls)
    return out


def power_product_check(
    w: WeightSpec, l: int, family: str, horizon: int = DEFAULT_HORIZON, config: ClassifyConfig | None = None
) -> Verdict:
    """Class verdict on ``contract(A ∩ l Z+, l)``; ``l = 1`` is the plain classification."""
    l = int(l)
    if l < 1:
        raise DomainError("l must be >= 1")
    config = config or ClassifyConfig()
    cls = family
    if family not in CLASSES:
        inverse = {v: k for k, v in CLASS_FAMILY.items()}
        if family not in inverse:
            raise ConfigurationError(f"unknown class or family {family!r}")
        cls = inverse[family]
    if w.periodic and l == 1:
        return _certified(w, cls, int(horizon))
    ctx = _Context(w, horizon, config)
    if l == 1:
        return _class_verdict(ctx, cls)
    return _class_verdict(ctx, cls, transform=lambda A: A.contract(l), scale=l)


def verify_classification(
    w: WeightSpec, verdicts: dict, horizon: int = DEFAULT_HORIZON, config: ClassifyConfig | None = None
) -> list[str]:
    """Re-check every class verdict against freshly computed return-time sets.

    Returns the names of the classes whose witnesses do not verify.
    """
    config = config or ClassifyConfig()
    bad = []
    if w.periodic:
        for cls, v in verdicts.items():
            if v != _certified(w, cls, int(horizon)):
                bad.append(cls)
        return bad
    ctx = _Context(w, horizon, config)
    for cls, v in verdicts.items():
        H = v.horizon
        subs = v.witness.get("sub", [])
        ok = bool(subs) and v.holds == all(
            (s["holds"] if "holds" in s else s["verdict"].holds) for s in subs
        )
        for s in subs:
            if "verdict" not in s:
                continue
            A = ctx.A(s["t"], s["j"]).truncate(H)
            ok = ok and verify(s["verdict"], A)
        if cls == "transitive" and ok:
            # recompute the witnesses directly
            ok = v == _class_verdict(ctx, cls)
        if not ok:
            bad.append(cls)
    return bad
