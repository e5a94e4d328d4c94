"""Exact subsets of the positive integers stored as sorted half-open runs.

A :class:`RunSet` holds a canonical list of runs ``[a, b)`` with
``1 <= a < b`` and ``b_i < a_{i+1}`` (no overlap, no adjacency).  Endpoints are
arbitrary-precision integers; internally they live in numpy arrays that are
``int64`` while every endpoint is comfortably inside machine range and fall
back to ``object`` arrays of Python ints otherwise.  Every operation works run
by run, so the cost depends on the number of runs and never on the number of
elements.

The ground set is ``{1, 2, 3, ...}``.  There is no infinite or cofinite
RunSet: complements are always taken inside ``[1, horizon]``.
"""

from __future__ import annotations

import functools
import json
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "INFINITE",
    "Infinite",
    "RunSet",
    "counting",
    "set_algebra",
]

# int64 arrays are only used while endpoints stay below this bound, which
# leaves room for one addition without overflow.
_SAFE = 1 << 61


@functools.total_ordering
class Infinite:
    """Marker for an unbounded gap (sets with fewer than two elements)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return False

    def __hash__(self):
        return hash("ftrans.INFINITE")

    def __repr__(self):
        return "INFINITE"


INFINITE = Infinite()


# largest horizon for which multiplicity tables use a dense bitmap
_BITMAP_CAP = 50_000_000


def _pack(values) -> np.ndarray:
    """Integer array, int64 when safe and object (Python ints) otherwise."""
    if isinstance(values, np.ndarray):
        if values.dtype == object:
            if len(values) == 0:
                return values.astype(np.int64)
            lo, hi = min(values), max(values)
            if -_SAFE < lo and hi < _SAFE:
                return values.astype(np.int64)
            return values
        return values.astype(np.int64, copy=False)
    values = list(values)
    if not values:
        return np.zeros(0, dtype=np.int64)
    if -_SAFE < min(values) and max(values) < _SAFE:
        return np.array(values, dtype=np.int64)
    arr = np.empty(len(values), dtype=object)
    arr[:] = [int(v) for v in values]
    return arr


def _widen(arr: np.ndarray, bound) -> np.ndarray:
    """Promote ``arr`` to object dtype if arithmetic could reach ``bound``."""
    if arr.dtype != object and abs(int(bound)) >= _SAFE:
        return arr.astype(object)
    return arr


def _check_nat(x, name: str) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, np.integer)):
        raise TypeError(f"{name} must be an integer, got {type(x).__name__}")
    return int(x)


class RunSet:
    """Immutable finite set of positive integers in run-length form.

    ``RunSet([(1, 4), (6, 8)])`` is ``{1, 2, 3, 6, 7}``.  Input runs may
    overlap, touch, be unsorted, or reach below 1; they are normalized.
    """

    __slots__ = ("_s", "_e", "_cum")

    def __init__(self, runs: Iterable[tuple[int, int]] = ()):
        pairs = [(int(a), int(b)) for a, b in runs]
        pairs = [(max(a, 1), b) for a, b in pairs if b > max(a, 1)]
        pairs.sort()
        starts: list[int] = []
        ends: list[int] = []
        for a, b in pairs:
            if ends and a <= ends[-1]:
                if b > ends[-1]:
                    ends[-1] = b
            else:
                starts.append(a)
                ends.append(b)
        self._s = _pack(starts)
        self._e = _pack(ends)
        self._cum = None

    @classmethod
    def _raw(cls, starts: np.ndarray, ends: np.ndarray) -> "RunSet":
        # Trusted constructor: arrays already canonical.
        obj = cls.__new__(cls)
        obj._s = _pack(starts)
        obj._e = _pack(ends)
        obj._cum = None
        return obj

    @classmethod
    def _from_pieces(cls, starts: np.ndarray, ends: np.ndarray) -> "RunSet":
        """Canonicalize possibly empty, touching or overlapping pieces."""
        starts = _pack(starts)
        ends = _pack(ends)
        if len(starts):
            one = np.ones(1, dtype=starts.dtype)[0]
            starts = np.maximum(starts, one)
        keep = ends > starts
        starts, ends = starts[keep], ends[keep]
        if len(starts) == 0:
            return cls()
        order = np.argsort(starts, kind="stable")
        starts, ends = starts[order], ends[order]
        reach = np.maximum.accumulate(ends)
        new = np.ones(len(starts), dtype=bool)
        new[1:] = starts[1:] > reach[:-1]
        idx = np.flatnonzero(new)
        last = np.append(idx[1:] - 1, len(starts) - 1)
        return cls._raw(starts[idx], reach[last])

    @classmethod
    def from_elements(cls, xs: Iterable[int]) -> "RunSet":
        arr = np.unique(_pack([int(x) for x in xs]))
        arr = arr[arr >= 1]
        if len(arr) == 0:
            return cls()
        brk = np.flatnonzero(arr[1:] != arr[:-1] + 1)
        first = np.concatenate(([0], brk + 1))
        last = np.concatenate((brk, [len(arr) - 1]))
        return cls._raw(arr[first], arr[last] + 1)

    @classmethod
    def from_indicator(cls, mask, offset: int = 1) -> "RunSet":
        """Set of ``offset + i`` for every true ``mask[i]``."""
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            return cls()
        padded = np.concatenate(([False], mask, [False])).astype(np.int8)
        edges = np.diff(padded)
        starts = np.flatnonzero(edges == 1) + offset
        ends = np.flatnonzero(edges == -1) + offset
        return cls._from_pieces(starts, ends)

    @classmethod
    def interval(cls, a: int, b: int) -> "RunSet":
        """The integers ``a <= x < b`` (clipped to x >= 1)."""
        return cls([(a, b)])

    # -- basic protocol -------------------------------------------------

    @property
    def runs(self) -> list[tuple[int, int]]:
        return list(zip(self._s.tolist(), self._e.tolist()))

    @property
    def starts(self) -> np.ndarray:
        return self._s

    @property
    def ends(self) -> np.ndarray:
        return self._e

    @property
    def n_runs(self) -> int:
        return len(self._s)

    def is_empty(self) -> bool:
        return len(self._s) == 0

    def size(self) -> int:
        """Number of elements (arbitrary precision)."""
        if self.is_empty():
            return 0
        return int(self._cumulative()[-1])

    def __len__(self) -> int:
        return self.size()

    def __bool__(self) -> bool:
        return not self.is_empty()

    def __iter__(self) -> Iterator[int]:
        for a, b in self.runs:
            yield from range(a, b)

    def __contains__(self, x) -> bool:
        x = int(x)
        if self.is_empty() or x < 1 or x > self.max():
            return False
        i = int(np.searchsorted(self._s, x, side="right")) - 1
        return i >= 0 and x < self._e[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunSet):
            return NotImplemented
        return self.runs == other.runs

    def __hash__(self) -> int:
        return hash(tuple(self.runs))

    def __repr__(self) -> str:
        shown = self.runs[:6]
        body = ", ".join(f"[{a},{b})" for a, b in shown)
        more = f", ... ({self.n_runs} runs)" if self.n_runs > 6 else ""
        return f"RunSet({{{body}{more}}})"

    def min(self) -> int:
        if self.is_empty():
            raise ValueError("empty RunSet has no minimum")
        return int(self._s[0])

    def max(self) -> int:
        if self.is_empty():
            raise ValueError("empty RunSet has no maximum")
        return int(self._e[-1]) - 1

    def issubset(self, other: "RunSet") -> bool:
        return self.difference(other).is_empty()

    def __le__(self, other: "RunSet") -> bool:
        return self.issubset(other)

    def __or__(self, other):
        return self.union(other)

    def __and__(self, other):
        return self.intersect(other)

    def __sub__(self, other):
        return self.difference(other)

    # -- set algebra ----------------------------------------------------

    def union(self, other: "RunSet") -> "RunSet":
        if self.is_empty():
            return other
        if other.is_empty():
            return self
        s = np.concatenate((_widen(self._s, other.max()), _widen(other._s, self.max())))
        e = np.concatenate((_widen(self._e, other.max()), _widen(other._e, self.max())))
        return RunSet._from_pieces(s, e)

    def complement(self, horizon: int) -> "RunSet":
        """``[1, horizon] \\ self``."""
        if horizon is None:
            raise ConfigurationError("complement needs a horizon")
        horizon = _check_nat(horizon, "horizon")
        part = self.truncate(horizon)
        s = _widen(part._s, horizon + 1)
        e = _widen(part._e, horizon + 1)
        one = np.ones(1, dtype=s.dtype)
        top = np.full(1, horizon + 1, dtype=s.dtype)
        new_s = np.concatenate((one, e))
        new_e = np.concatenate((s, top))
        keep = new_e > new_s
        return RunSet._raw(new_s[keep], new_e[keep])

    def intersect(self, other: "RunSet") -> "RunSet":
        if self.is_empty() or other.is_empty():
            return RunSet()
        sa, ea, sb, eb = self._s, self._e, other._s, other._e
        if (sa.dtype == object) != (sb.dtype == object):
            sa, ea, sb, eb = (x.astype(object) for x in (sa, ea, sb, eb))
        # run i of self meets runs lo[i] .. hi[i]-1 of other
        lo = np.searchsorted(eb, sa, side="right")
        hi = np.searchsorted(sb, ea, side="left")
        cnt = np.maximum(hi - lo, 0)
        if cnt.sum() == 0:
            return RunSet()
        ia = np.repeat(np.arange(len(sa)), cnt)
        first = np.repeat(lo, cnt)
        offs = np.arange(int(cnt.sum())) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        ib = first + offs
        # pieces of distinct pairs are disjoint and never adjacent
        return RunSet._raw(np.maximum(sa[ia], sb[ib]), np.minimum(ea[ia], eb[ib]))

    def difference(self, other: "RunSet") -> "RunSet":
        if self.is_empty() or other.is_empty():
            return self
        return self.intersect(other.complement(self.max()))

    def truncate(self, horizon: int) -> "RunSet":
        """``self`` intersected with ``[1, horizon]``."""
        horizon = int(horizon)
        if horizon < 1:
            return RunSet()
        i = int(np.searchsorted(self._s, horizon, side="right"))
        s = self._s[:i]
        e = self._e[:i].copy()
        if i:
            e = _widen(e, horizon + 1)
            if e[-1] > horizon + 1:
                e[-1] = horizon + 1
        return RunSet._raw(s, e)

    def restrict(self, lo: int, hi: int) -> "RunSet":
        """``self`` intersected with ``[lo, hi]``."""
        return self.intersect(RunSet.interval(lo, int(hi) + 1))

    def shift_plus(self, i: int) -> "RunSet":
        """``self + i``."""
        i = _check_nat(i, "shift")
        if self.is_empty():
            return self
        s = _widen(self._s, self.max() + i + 1)
        e = _widen(self._e, self.max() + i + 1)
        return RunSet._raw(s + i, e + i)

    def shift_minus(self, i: int) -> "RunSet":
        """``(self - i)`` intersected with the positive integers."""
        i = _check_nat(i, "shift")
        if self.is_empty():
            return self
        return RunSet._from_pieces(_widen(self._s, i) - i, _widen(self._e, i) - i)

    def translate(self, k: int) -> "RunSet":
        """``(self + k)`` clipped to the positive integers, for any sign of k."""
        k = int(k)
        return self.shift_plus(k) if k >= 0 else self.shift_minus(-k)

    def scale(self, n: int) -> "RunSet":
        """``{n * x : x in self}``; for ``n >= 2`` every element becomes its own run."""
        n = _check_nat(n, "scale factor")
        if n == 0:
            raise DomainError("scale factor must be >= 1")
        if n == 1:
            return self
        xs = [n * x for x in self]
        return RunSet._raw(_pack(xs), _pack([x + 1 for x in xs]))

    def contract(self, n: int) -> "RunSet":
        """``{x / n : x in self, n | x}``."""
        n = _check_nat(n, "contract factor")
        if n == 0:
            raise DomainError("contract factor must be >= 1")
        if n == 1 or self.is_empty():
            return self
        # multiples of n in [a, b) map to [ceil(a/n), ceil(b/n))
        return RunSet._from_pieces(-((-self._s) // n), -((-self._e) // n))

    def multiples(self, n: int) -> "RunSet":
        """``self`` intersected with ``n * Z+``, i.e. ``scale(contract(self, n), n)``."""
        return self.contract(n).scale(n)

    # -- counting -------------------------------------------------------

    def _cumulative(self) -> np.ndarray:
        # _cum[i] = number of elements in the first i runs
        if self._cum is None:
            lengths = self._e - self._s
            cum = np.zeros(len(lengths) + 1, dtype=lengths.dtype)
            if len(lengths):
                cum[1:] = np.cumsum(lengths)
            self._cum = cum
        return self._cum

    def prefix_count(self, n):
        """``|self ∩ [1, n]|``; ``n`` may be an int or an integer array."""
        scalar = np.ndim(n) == 0
        q = _pack([int(n)]) if scalar else _pack(np.asarray(n))
        if self.is_empty():
            out = np.zeros(len(q), dtype=np.int64)
            return 0 if scalar else out
        cum = self._cumulative()
        s, e = self._s, self._e
        if q.dtype == object or s.dtype == object:
            s = s.astype(object)
            e = e.astype(object)
            cum = cum.astype(object)
            q = q.astype(object)
        i = np.searchsorted(s, q, side="right")
        j = np.maximum(i - 1, 0)
        partial = np.minimum(e[j], q + 1) - s[j]
        out = np.where(i > 0, cum[j] + partial, 0)
        if scalar:
            return int(out[0])
        return out

    def count_between(self, lo: int, hi: int) -> int:
        """``|self ∩ [lo, hi]|``."""
        if hi < lo:
            return 0
        return self.prefix_count(hi) - self.prefix_count(lo - 1)

    def window_count(self, k: int, s: int) -> int:
        """``|self ∩ [k+1, k+s]|``."""
        return self.prefix_count(k + s) - self.prefix_count(k)

    def window_extrema(self, s: int, k_lo: int, k_hi: int) -> tuple[int, int, int, int]:
        """Min and max of ``window_count(k, s)`` over ``k_lo <= k <= k_hi``.

        Returns ``(min_count, argmin_k, max_count, argmax_k)``.  The window count
        is piecewise linear in k with breaks only where k or k + s crosses a run
        boundary, so only those k need evaluating.
        """
        k_lo, k_hi, s = int(k_lo), int(k_hi), int(s)
        if k_hi < k_lo:
            raise ValueError("empty window sweep")
        if s < 1:
            raise ValueError("window length must be >= 1")
        part = self.truncate(k_hi + s)
        pts = [k_lo, k_hi]
        if not part.is_empty():
            bounds = np.concatenate((part._s - 1, part._e - 1))
            cand = np.concatenate((bounds, bounds - s))
            cand = cand[(cand >= k_lo) & (cand <= k_hi)]
            pts.extend(cand.tolist())
        ks = _pack(sorted(set(pts)))
        counts = part.prefix_count(_widen(ks, k_hi + s) + s) - part.prefix_count(ks)
        imin = int(np.argmin(counts))
        imax = int(np.argmax(counts))
        return int(counts[imin]), int(ks[imin]), int(counts[imax]), int(ks[imax])

    def gaps(self, upto: int | None = None) -> list[tuple[int, int]]:
        """Consecutive element pairs ``(x, y)`` with ``y - x >= 2`` (within [1, upto])."""
        part = self if upto is None else self.truncate(upto)
        return list(zip((part._e[:-1] - 1).tolist(), part._s[1:].tolist()))

    def max_gap(self, upto: int | None = None):
        """Largest difference between consecutive elements, or ``INFINITE``."""
        part = self if upto is None else self.truncate(upto)
        if part.is_empty() or part.size() < 2:
            return INFINITE
        if part.n_runs == 1:
            return 1
        return int(np.max(part._s[1:] - (part._e[:-1] - 1)))

    def max_gap_at(self, upto: int | None = None) -> tuple[int, int] | None:
        """The consecutive pair realizing :meth:`max_gap` (first one), if any."""
        part = self if upto is None else self.truncate(upto)
        if part.n_runs < 2:
            return None
        d = part._s[1:] - (part._e[:-1] - 1)
        i = int(np.argmax(d))
        return int(part._e[i]) - 1, int(part._s[i + 1])

    def max_run(self, upto: int | None = None) -> int:
        part = self if upto is None else self.truncate(upto)
        if part.is_empty():
            return 0
        return int(np.max(part._e - part._s))

    def longest_run(self, upto: int | None = None) -> tuple[int, int]:
        """``(start, length)`` of the first longest run."""
        part = self if upto is None else self.truncate(upto)
        if part.is_empty():
            return 0, 0
        lengths = part._e - part._s
        i = int(np.argmax(lengths))
        return int(part._s[i]), int(lengths[i])

    # -- transforms used by the family calculus ---------------------------

    def shrink(self, N: int, horizon: int) -> "RunSet":
        """``{m <= horizon : [m-N, m+N] ∩ Z+ ⊆ self}``.

        The caller must have materialized ``self`` up to ``horizon + N``.
        """
        N = _check_nat(N, "N")
        if N == 0 or self.is_empty():
            return self.truncate(horizon)
        s, e = self._s, self._e
        lo = np.where(s == 1, s, s + N)
        return RunSet._from_pieces(lo, e - N).truncate(horizon)

    def difference_multiplicity(self, v: int, horizon: int) -> int:
        """``#{x : x in A, x + v in A, x + v <= horizon}``."""
        v = _check_nat(v, "v")
        if v < 1:
            raise DomainError("v must be >= 1")
        part = self.truncate(horizon)
        return part.intersect(part.shift_minus(v)).size()

    def to_indicator(self, horizon: int) -> np.ndarray:
        """Boolean mask whose entry ``i`` says whether ``i + 1`` is in the set, for ``i < horizon``."""
        horizon = _check_nat(horizon, "horizon")
        part = self.truncate(horizon)
        delta = np.zeros(horizon + 1, dtype=np.int32)
        # canonical runs never touch, so starts and ends are distinct positions
        delta[(part.starts - 1).astype(np.int64)] += 1
        delta[(part.ends - 1).astype(np.int64)] -= 1
        return np.cumsum(delta[:-1]) > 0

    def difference_multiplicities(self, vs: Sequence[int], horizons: Sequence[int]) -> list[list[int]]:
        """``difference_multiplicity(v, h)`` for every ``v`` in ``vs`` and ``h`` in ``horizons``."""
        hs = [_check_nat(h, "horizon") for h in horizons]
        if not hs:
            return [[] for _ in vs]
        top = max(hs)
        if top > _BITMAP_CAP or self.truncate(top).n_runs * 64 < top:
            return [[self.difference_multiplicity(v, h) for h in hs] for v in vs]
        mask = self.to_indicator(top)
        out = []
        for v in vs:
            v = _check_nat(v, "v")
            if v < 1:
                raise DomainError("v must be >= 1")
            both = mask[:-v] & mask[v:] if v < top else np.zeros(0, dtype=bool)
            # both[i] marks x = i + 1 with x + v = i + 1 + v <= top
            out.append([int(np.count_nonzero(both[: max(h - v, 0)])) for h in hs])
        return out

    # -- serialization --------------------------------------------------

    def to_json_obj(self) -> dict:
        return {"runs": [[str(a), str(b)] for a, b in self.runs]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: dict) -> "RunSet":
        runs = [(int(a), int(b)) for a, b in obj["runs"]]
        out = cls(runs)
        if out.runs != runs:
            raise ValueError("RunSet JSON is not in canonical form")
        return out

    @classmethod
    def from_json(cls, text: str) -> "RunSet":
        return cls.from_json_obj(json.loads(text))


def set_algebra(op: str, A: RunSet, arg=None, horizon: int | None = None) -> RunSet:
    """Dispatch one of the named set operations."""
    if op == "union":
        return A.union(arg)
    if op == "intersect":
        return A.intersect(arg)
    if op == "complement":
        if horizon is None:
            raise ConfigurationError("complement requires a horizon")
        return A.complement(horizon)
    if op == "shift_plus":
        return A.shift_plus(arg)
    if op == "shift_minus":
        return A.shift_minus(arg)
    if op == "scale":
        return A.scale(arg)
    if op == "contract":
        return A.contract(arg)
    raise ConfigurationError(f"unknown set operation {op!r}")


def counting(A: RunSet, kind: str, n_or_s: int, range: tuple[int, int] | None = None):
    """Dispatch one of the named counting queries."""
    if kind == "prefix_count":
        return A.prefix_count(n_or_s)
    if kind in ("window_min", "window_max"):
        if range is None:
            raise ConfigurationError(f"{kind} requires a k range")
        lo, _, hi, _ = A.window_extrema(n_or_s, range[0], range[1])
        return lo if kind == "window_min" else hi
    if kind == "max_gap":
        return A.max_gap(n_or_s)
    if kind == "max_run":
        return A.max_run(n_or_s)
    raise ConfigurationError(f"unknown counting query {kind!r}")
