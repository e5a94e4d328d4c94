"""Exact simulation of dyadic weighted backward shifts on finitely supported vectors.

Weights are ``w_i = 2**e_i`` so every coordinate stays a dyadic rational and
norms (sup and l1) are exact Fractions.  The return set ``N(U, V)`` for the
open sets used in the characterization proof is never computed directly; it
is sandwiched between a witness-based lower set and the A-set upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, InvariantViolation
from .families import _jsonable
from .intset import RunSet
from .shifts import (
    ExponentProfile,
    WeightSpec,
    compile_exponent_profile,
    return_time_sets,
    threshold_exponent,
)

__all__ = [
    "CriterionReport",
    "CylinderOpen",
    "DyadicVector",
    "Sandwich",
    "apply_power",
    "criterion_check",
    "default_sandwich_grid",
    "forward_power",
    "return_set_bounds",
    "witness_coefficient",
]

NORMS = ("sup", "l1")


def _dyadic(q) -> Fraction:
    q = Fraction(q)
    d = q.denominator
    if d & (d - 1):
        raise DomainError(f"{q} is not a dyadic rational")
    return q


def _pow2(k: int) -> Fraction:
    return Fraction(1 << k) if k >= 0 else Fraction(1, 1 << -k)


@dataclass(frozen=True)
class DyadicVector:
    """Finitely supported vector with dyadic entries; zero entries are dropped."""

    entries: Mapping[int, Fraction] = field(default_factory=dict)
    kind: str = "bilateral"

    def __post_init__(self):
        if self.kind not in ("unilateral", "bilateral"):
            raise ConfigurationError(f"unknown kind {self.kind!r}")
        clean = {}
        for k, v in dict(self.entries).items():
            k = int(k)
            v = _dyadic(v)
            if v == 0:
                continue
            if self.kind == "unilateral" and k < 0:
                raise DomainError("unilateral vectors live on indices >= 0")
            clean[k] = v
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @classmethod
    def basis(cls, j: int, kind: str = "bilateral", coeff=1) -> "DyadicVector":
        return cls({int(j): coeff}, kind)

    @property
    def support(self) -> list[int]:
        return list(self.entries)

    def __getitem__(self, k: int) -> Fraction:
        return self.entries.get(int(k), Fraction(0))

    def __add__(self, other: "DyadicVector") -> "DyadicVector":
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, Fraction(0)) + v
        return DyadicVector(out, self.kind)

    def __sub__(self, other: "DyadicVector") -> "DyadicVector":
        return self + other.scale(-1)

    def scale(self, c) -> "DyadicVector":
        c = _dyadic(c)
        return DyadicVector({k: c * v for k, v in self.entries.items()}, self.kind)

    def is_zero(self) -> bool:
        return not self.entries

    def norm(self, which: str = "sup") -> Fraction:
        if which not in NORMS:
            raise ConfigurationError(f"norm must be one of {NORMS}")
        vals = [abs(v) for v in self.entries.values()]
        if not vals:
            return Fraction(0)
        return max(vals) if which == "sup" else sum(vals, Fraction(0))

    def to_json_obj(self) -> dict:
        rows = []
        for k, v in self.entries.items():
            exp = v.denominator.bit_length() - 1
            rows.append([str(k), str(v.numerator), exp])
        return {"kind": self.kind, "entries": rows}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "DyadicVector":
        return cls({int(k): Fraction(int(num), 1 << int(exp)) for k, num, exp in obj["entries"]}, obj["kind"])


@dataclass(frozen=True)
class CylinderOpen:
    """One of the two open sets used in the return-set inclusion.

    ``coord_lower_bound_with_norm_cap``: ``|x_index| > bound`` and ``||x|| < cap``.
    ``ball``: ``||x - center|| < radius``.
    """

    kind: str
    norm: str = "sup"
    index: int | None = None
    bound: Fraction = Fraction(0)
    cap: Fraction = Fraction(1)
    center: DyadicVector | None = None
    radius: Fraction = Fraction(1)

    def __post_init__(self):
        if self.norm not in NORMS:
            raise ConfigurationError(f"norm must be one of {NORMS}")
        if self.kind == "coord_lower_bound_with_norm_cap":
            if self.index is None:
                raise ConfigurationError("coordinate set needs an index")
            object.__setattr__(self, "bound", _dyadic(self.bound))
            object.__setattr__(self, "cap", _dyadic(self.cap))
        elif self.kind == "ball":
            if self.center is None:
                raise ConfigurationError("ball needs a center")
            object.__setattr__(self, "radius", _dyadic(self.radius))
        else:
            raise ConfigurationError(f"unknown open-set kind {self.kind!r}")

    @classmethod
    def coordinate(cls, j: int, R: int, norm: str = "sup") -> "CylinderOpen":
        if R < 1 or R & (R - 1):
            # 1/R must stay dyadic
            raise DomainError("R must be a power of two")
        return cls("coord_lower_bound_with_norm_cap", norm, index=int(j), bound=Fraction(1, R), cap=Fraction(1))

    @classmethod
    def ball(cls, center: DyadicVector, R: int, norm: str = "sup") -> "CylinderOpen":
        if R < 1 or R & (R - 1):
            raise DomainError("R must be a power of two")
        return cls("ball", norm, center=center, radius=Fraction(1, R * R))

    def contains(self, x: DyadicVector) -> bool:
        if self.kind == "ball":
            return (x - self.center).norm(self.norm) < self.radius
        return abs(x[self.index]) > self.bound and x.norm(self.norm) < self.cap


# -- exact shift arithmetic ---------------------------------------------------


class _Exponents:
    """``E`` tabulated as a Python list over ``[lo, hi]`` for fast scalar lookups."""

    def __init__(self, prof: ExponentProfile, lo: int, hi: int):
        self.kind = prof.kind
        self.lo = int(lo)
        self.hi = int(hi)
        self.vals = prof.E(np.arange(self.lo, self.hi + 1, dtype=np.int64)).tolist()

    def __call__(self, p: int) -> int:
        if not self.lo <= p <= self.hi:
            raise ConfigurationError(f"exponent table covers [{self.lo}, {self.hi}], asked for {p}")
        return self.vals[p - self.lo]


def _table(w, lo: int, hi: int) -> _Exponents:
    if isinstance(w, _Exponents):
        return w
    if isinstance(w, ExponentProfile):
        prof = w
    else:
        reach = max(abs(lo), abs(hi)) + 1
        prof = compile_exponent_profile(w, reach, reach if w.kind == "bilateral" else None)
    if prof.kind == "unilateral":
        lo = max(lo, 0)
    return _Exponents(prof, lo, hi)


def apply_power(w, x: DyadicVector, m: int, table: _Exponents | None = None) -> DyadicVector:
    """``B_w**m x`` exactly: ``(B**m x)_k = 2**(E(k+m) - E(k)) x_{k+m}``.

    On unilateral shifts coordinates pushed below index 0 vanish.
    """
    m = int(m)
    if m < 0:
        raise DomainError("power must be >= 0")
    if m == 0 or x.is_zero():
        return x
    supp = x.support
    if table is None:
        table = _table(w, min(supp) - m, max(supp))
    out = {}
    for p, v in x.entries.items():
        k = p - m
        if x.kind == "unilateral" and k < 0:
            continue
        out[k] = v * _pow2(table(p) - table(k))
    return DyadicVector(out, x.kind)


def forward_power(w, x: DyadicVector, n: int, table: _Exponents | None = None) -> DyadicVector:
    """``S_n x`` with ``S e_i = e_{i+1} / w_{i+1}``, the right inverse of ``B_w**n`` on finite supports."""
    n = int(n)
    if n < 0:
        raise DomainError("power must be >= 0")
    if n == 0 or x.is_zero():
        return x
    supp = x.support
    if table is None:
        table = _table(w, min(supp), max(supp) + n)
    return DyadicVector({p + n: v * _pow2(table(p) - table(p + n)) for p, v in x.entries.items()}, x.kind)


# -- return-set sandwich ------------------------------------------------------


def witness_coefficient(R: int) -> Fraction:
    """``(R+1)/(2R)`` rounded to 8 fractional bits; lies strictly between 1/R and 1."""
    a = Fraction(round(Fraction(R + 1, 2 * R) * 256), 256)
    if not Fraction(1, R) < a < 1:
        raise DomainError(f"no 8-bit dyadic strictly between 1/{R} and 1")
    return a


@dataclass
class Sandwich:
    """``lower ⊆ N(U, V) ⊆ upper`` up to the horizon; iterates as ``(lower, upper)``."""

    lower: RunSet
    upper: RunSet
    forward: RunSet
    backward: RunSet
    params: dict
    verified: int = 0
    rejected: list = field(default_factory=list)

    def __iter__(self) -> Iterator[RunSet]:
        yield self.lower
        yield self.upper

    @property
    def tight(self) -> bool:
        return self.lower == self.upper

    def to_json_obj(self) -> dict:
        return _jsonable(
            {
                "params": self.params,
                "lower": self.lower,
                "upper": self.upper,
                "A_forward": self.forward,
                "A_backward": self.backward,
                "lower_verified": self.verified,
                "lower_rejected": self.rejected,
                "tight": self.tight,
            }
        )


def _open_sets(j: int, N: int, R: int, kind: str, norm: str) -> tuple[CylinderOpen, CylinderOpen]:
    U = CylinderOpen.coordinate(j, R, norm)
    V = CylinderOpen.ball(DyadicVector.basis(j, kind, N + 1), R, norm)
    return U, V


def _witness(j: int, m: int, N: int, a: Fraction, table: _Exponents, kind: str) -> DyadicVector:
    b = Fraction(N + 1) * _pow2(table(j) - table(j + m))
    return DyadicVector({j: a, j + m: b}, kind)


def return_set_bounds(
    w,
    j: int,
    N: int,
    R: int,
    horizon: int,
    norm: str = "sup",
    verify: bool = True,
) -> Sandwich:
    """Two-sided bounds on ``N(U, V)`` for ``U = {|x_j| > 1/R, ||x|| < 1}``, ``V = B((N+1) e_j, 1/R**2)``.

    ``upper`` is the forward set intersected with the backward set at level N (for unilateral shifts the backward
    condition only applies to ``m <= j``).  ``lower`` is the set of ``m`` for
    which the witness ``a e_j + b e_{j+m}`` with ``b = (N+1) / prod w`` lies in
    ``U`` and is mapped into ``V`` by ``B_w**m``.  With ``verify`` every lower
    member is re-checked by exact simulation.
    """
    j, N, R, horizon = int(j), int(N), int(R), int(horizon)
    if N < 1 or R <= N:
        raise DomainError("need R > N >= 1")
    if norm not in NORMS:
        raise ConfigurationError(f"norm must be one of {NORMS}")
    a = witness_coefficient(R)
    reach = horizon + abs(j) + 1
    if isinstance(w, ExponentProfile):
        prof = w
    else:
        prof = compile_exponent_profile(w, reach, reach if w.kind == "bilateral" else None)
    unilateral = prof.kind == "unilateral"
    if unilateral and j < 0:
        raise DomainError("unilateral shifts have no negative offsets")
    tail = RunSet.interval(j + 1, horizon + 1)

    fwd, bwd = return_time_sets(prof, threshold_exponent(N), j, horizon)
    upper = fwd.intersect(bwd.union(tail) if unilateral else bwd)

    # b < 1 (sup) or a + b < 1 (l1) on the far coordinate; a * 2**(E(j)-E(j-m)) < 1/R**2 on the near one
    far = Fraction(N + 1) if norm == "sup" else Fraction(N + 1) / (1 - a)
    lo_fwd, _ = return_time_sets(prof, threshold_exponent(far), j, horizon)
    _, lo_bwd = return_time_sets(prof, threshold_exponent(a * R * R), j, horizon)
    lower = lo_fwd.intersect(lo_bwd.union(tail) if unilateral else lo_bwd)

    params = {"j": j, "N": N, "R": R, "horizon": horizon, "norm": norm, "a": a, "kind": prof.kind}
    out = Sandwich(lower, upper, fwd, bwd, params)
    if not lower.issubset(upper):
        raise InvariantViolation(f"lower bound escapes the upper bound at {lower.difference(upper).min()}")
    if verify:
        table = _Exponents(prof, max(j - horizon, prof.left), j + horizon)
        U, V = _open_sets(j, N, R, prof.kind, norm)
        for m in lower:
            x = _witness(j, m, N, a, table, prof.kind)
            if U.contains(x) and V.contains(apply_power(prof, x, m, table)):
                out.verified += 1
            else:
                out.rejected.append(m)
        if out.rejected:
            raise InvariantViolation(f"witness fails exact simulation at m = {out.rejected[0]}")
    return out


def default_sandwich_grid(kind: str) -> list[tuple[int, int, int]]:
    """Default ``(j, N, R)`` tuples: ``R`` a power of two above ``N``."""
    js = (0, 1, 2) if kind == "unilateral" else (-1, 0, 1, 2)
    return [(j, N, R) for j in js for N, R in ((1, 2), (1, 4), (3, 4))]


# -- criterion conditions ---------------------------------------------------


@dataclass
class CriterionReport:
    backward_small: RunSet
    forward_small: RunSet
    rows: list
    params: dict

    @property
    def violations(self) -> int:
        return sum(r["backward_violations"].size() + r["forward_violations"].size() for r in self.rows)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_json_obj(self) -> dict:
        return _jsonable(
            {
                "params": self.params,
                "backward_small": self.backward_small,
                "forward_small": self.forward_small,
                "rows": self.rows,
                "violations": self.violations,
            }
        )


def _small_set(vectors: Iterable[tuple[int, DyadicVector]], eps: Fraction, norm: str) -> RunSet:
    return RunSet.from_elements(n for n, y in vectors if y.norm(norm) < eps)


def criterion_check(
    w,
    x: DyadicVector,
    epsilon,
    horizon: int,
    t_grid: Sequence[int] = (0,),
    j_grid: Sequence[int] = (0,),
    norm: str = "sup",
) -> CriterionReport:
    """Check the two inclusions behind the criterion for ``x`` up to the horizon.

    With ``m = max(1, max |support|)`` and ``M = ||x||_inf * 2m / epsilon`` the
    intersections of backward (forward) A-sets over ``|j| <= m`` must lie in
    ``{n : ||B**n x|| < epsilon}`` (``{n : ||S_n x|| < epsilon}``).  Each row
    repeats the check at ``2**t * M`` with the offset range widened by ``extra``.
    """
    eps = Fraction(epsilon)
    if eps <= 0:
        raise DomainError("epsilon must be positive")
    if x.is_zero():
        raise DomainError("x must be non-zero")
    if norm not in NORMS:
        raise ConfigurationError(f"norm must be one of {NORMS}")
    horizon = int(horizon)
    m = max(1, max(abs(k) for k in x.support))
    m_top = m + max(int(e) for e in j_grid)
    reach = horizon + m_top + 1
    if isinstance(w, ExponentProfile):
        prof = w
    else:
        prof = compile_exponent_profile(w, reach, reach if w.kind == "bilateral" else None)
    if prof.kind != x.kind:
        raise DomainError(f"{x.kind} vector on a {prof.kind} shift")
    table = _Exponents(prof, max(-reach, prof.left), reach)
    B_small = _small_set(((n, apply_power(prof, x, n, table)) for n in range(1, horizon + 1)), eps, norm)
    S_small = _small_set(((n, forward_power(prof, x, n, table)) for n in range(1, horizon + 1)), eps, norm)

    M = x.norm("sup") * 2 * m / eps
    unilateral = prof.kind == "unilateral"
    rows = []
    full = RunSet.interval(1, horizon + 1)
    for t in t_grid:
        for extra in j_grid:
            Mt = M * (1 << int(t))
            top = m + int(extra)
            js = range(0, top + 1) if unilateral else range(-top, top + 1)
            th = threshold_exponent(Mt)
            bcore = fcore = full
            for j in js:
                fwd, bwd = return_time_sets(prof, th, j, horizon)
                if unilateral:
                    bwd = bwd.union(RunSet.interval(j + 1, horizon + 1))
                bcore = bcore.intersect(bwd)
                fcore = fcore.intersect(fwd)
            rows.append(
                {
                    "t": int(t),
                    "extra_j": int(extra),
                    "M": Mt,
                    "backward_core": bcore,
                    "forward_core": fcore,
                    "backward_violations": bcore.difference(B_small),
                    "forward_violations": fcore.difference(S_small),
                }
            )
    params = {"epsilon": eps, "horizon": horizon, "norm": norm, "m": m, "M": M, "x": x.to_json_obj()}
    return CriterionReport(B_small, S_small, rows, params)
