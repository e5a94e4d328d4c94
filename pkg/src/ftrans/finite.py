"""Families of subsets of a small finite universe and their lattice identities.

A family on ``{1..n}`` is a non-empty upward-closed collection of non-empty
subsets.  Subsets are bitmasks (element ``i`` is bit ``i - 1``) and a family
is stored by its minimal sets; the full membership table (a boolean array of
length ``2**n``) drives the vectorized checks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable

import numpy as np

from .errors import ConfigurationError, DomainError, InvariantViolation

__all__ = [
    "FiniteFamily",
    "RegularityReport",
    "dual_family",
    "enumerate_families",
    "family_product",
    "product_within",
    "structure_checks",
    "verify_lemma23",
]

MAX_UNIVERSE = 6
MAX_EXHAUSTIVE = 5


def _minimal(masks: Iterable[int]) -> tuple[int, ...]:
    ms = sorted(set(masks), key=lambda m: (bin(m).count("1"), m))
    keep: list[int] = []
    for m in ms:
        if not any(k & m == k for k in keep):
            keep.append(m)
    return tuple(sorted(keep))


@lru_cache(maxsize=None)
def _subset_matrix(n: int) -> np.ndarray:
    """``S[a, b]`` is True when ``b ⊆ a``."""
    idx = np.arange(1 << n)
    return (idx[None, :] & ~idx[:, None]) == 0


@lru_cache(maxsize=None)
def _and_table(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return np.bitwise_and.outer(idx, idx)


@dataclass(frozen=True)
class FiniteFamily:
    universe_size: int
    minimal_sets: tuple[int, ...]

    def __post_init__(self):
        n = int(self.universe_size)
        if not 1 <= n <= MAX_UNIVERSE:
            raise ConfigurationError(f"universe size must be in [1, {MAX_UNIVERSE}]")
        ms = tuple(sorted(int(m) for m in self.minimal_sets))
        if not ms:
            raise DomainError("a family is non-empty")
        if any(m <= 0 or m >= 1 << n for m in ms):
            raise DomainError("minimal sets must be non-empty subsets of the universe")
        if _minimal(ms) != ms:
            raise DomainError("minimal sets must form an antichain")
        object.__setattr__(self, "universe_size", n)
        object.__setattr__(self, "minimal_sets", ms)

    @classmethod
    def upward(cls, n: int, generators: Iterable[Iterable[int]]) -> "FiniteFamily":
        """Upward closure of sets given as element lists, e.g. ``[[1], [2, 3]]``."""
        masks = []
        for g in generators:
            m = 0
            for e in g:
                if not 1 <= e <= n:
                    raise DomainError(f"element {e} outside 1..{n}")
                m |= 1 << (e - 1)
            masks.append(m)
        return cls(n, _minimal(masks))

    @classmethod
    def from_table(cls, n: int, table) -> "FiniteFamily":
        table = np.asarray(table, dtype=bool)
        if table[0]:
            raise DomainError("the empty set is never a member")
        return cls(n, _minimal(np.flatnonzero(table).tolist()))

    @cached_property
    def table(self) -> np.ndarray:
        """Membership of every subset, indexed by bitmask."""
        S = _subset_matrix(self.universe_size)
        return S[:, list(self.minimal_sets)].any(axis=1)

    @cached_property
    def members(self) -> np.ndarray:
        return np.flatnonzero(self.table)

    def __contains__(self, mask: int) -> bool:
        return 0 <= mask < 1 << self.universe_size and bool(self.table[mask])

    def __len__(self) -> int:
        return int(self.table.sum())

    def sets(self) -> list[frozenset[int]]:
        """Members as sets of elements (for display)."""
        return [frozenset(i + 1 for i in range(self.universe_size) if m >> i & 1) for m in self.members.tolist()]

    def to_json_obj(self) -> dict:
        return {"universe_size": self.universe_size, "minimal_sets": list(self.minimal_sets)}


# -- enumeration ----------------------------------------------------------------


@lru_cache(maxsize=None)
def _monotone(n: int) -> tuple[int, ...]:
    """All monotone boolean functions of ``n`` variables as truth-table ints.

    Bit ``S`` of a table is ``f(S)``.  A function splits on the top variable
    into ``f0 <= f1`` on ``n - 1`` variables: ``f = f0 | f1 << 2**(n-1)``.
    """
    if n == 0:
        return (0, 1)
    lower = _monotone(n - 1)
    half = 1 << (n - 1)
    out = []
    for f0 in lower:
        for f1 in lower:
            if f0 & ~f1 == 0:
                out.append(f0 | f1 << half)
    return tuple(out)


def _from_truth(n: int, f: int) -> FiniteFamily:
    members = [s for s in range(1 << n) if f >> s & 1]
    return FiniteFamily(n, _minimal(members))


def enumerate_families(n: int, mode: str = "exhaustive", samples: int = 1000, seed: int = 0) -> list[FiniteFamily]:
    """Every family on ``{1..n}`` exactly once, or ``samples`` random ones.

    Exhaustive mode walks the monotone boolean functions and drops the two
    constants (the empty collection and the one containing the empty set).
    Sampled mode draws random antichains and may repeat families.
    """
    n = int(n)
    if n < 1:
        raise ConfigurationError("universe size must be >= 1")
    if mode == "exhaustive":
        if n > MAX_EXHAUSTIVE:
            raise ConfigurationError(
                f"exhaustive enumeration is capped at n = {MAX_EXHAUSTIVE}; use mode='sampled' for n = {n}"
            )
        full = (1 << (1 << n)) - 1
        return [_from_truth(n, f) for f in _monotone(n) if f not in (0, full)]
    if mode != "sampled":
        raise ConfigurationError(f"unknown mode {mode!r}")
    if n > MAX_UNIVERSE:
        raise ConfigurationError(f"universe size is capped at {MAX_UNIVERSE}")
    rng = random.Random(seed)
    out = []
    for _ in range(int(samples)):
        k = rng.randint(1, 1 << (n - 1))
        gens = [rng.randrange(1, 1 << n) for _ in range(k)]
        out.append(FiniteFamily(n, _minimal(gens)))
    return out


# -- operations -------------------------------------------------------------------


def dual_family(F: FiniteFamily) -> FiniteFamily:
    """Sets meeting every member of ``F``, in minimal-antichain form."""
    n = F.universe_size
    meets = (_and_table(n)[:, F.members] != 0).all(axis=1)
    if not meets.any():
        raise InvariantViolation("dual family is empty")
    return FiniteFamily.from_table(n, meets)


def family_product(F1: FiniteFamily, F2: FiniteFamily) -> frozenset[int]:
    """The raw collection ``{A ∩ B}``; may contain the empty set and need not be upward closed."""
    if F1.universe_size != F2.universe_size:
        raise DomainError("families live on different universes")
    return frozenset(np.bitwise_and.outer(F1.members, F2.members).ravel().tolist())


def product_within(P: Iterable[int], F: FiniteFamily) -> bool:
    """Whether every set of the collection ``P`` is a member of ``F``."""
    return all(m in F for m in P)


def _is_filter(F: FiniteFamily) -> bool:
    m = F.members
    return bool(F.table[_and_table(F.universe_size)[np.ix_(m, m)]].all())


def _is_partition_regular(F: FiniteFamily) -> bool:
    # every 2-colouring B, A \ B of a member A has a member colour class
    n = F.universe_size
    S = _subset_matrix(n)[F.members]  # rows: members A, columns: B ⊆ A
    A, B = np.nonzero(S)
    a = F.members[A]
    return bool((F.table[B] | F.table[a & ~B]).all())


def _product_inside(F: FiniteFamily, G: FiniteFamily) -> bool:
    return bool(F.table[_and_table(F.universe_size)[np.ix_(F.members, G.members)]].all())


def structure_checks(F: FiniteFamily) -> dict:
    filt = _is_filter(F)
    pr = _is_partition_regular(F)
    return {"is_filter": filt, "is_partition_regular": pr, "is_ultrafilter": filt and pr}


# -- regularity verification -----------------------------------------------------------


@dataclass
class RegularityReport:
    n: int
    families: int
    tallies: dict
    counterexample: dict | None

    @property
    def ok(self) -> bool:
        return self.counterexample is None

    def to_json_obj(self) -> dict:
        return {
            "n": self.n,
            "families": self.families,
            "tallies": dict(self.tallies),
            "counterexample": self.counterexample,
            "ok": self.ok,
        }


def verify_lemma23(n: int, families: list[FiniteFamily] | None = None) -> RegularityReport:
    """Check on every family that partition regularity, ``F·F* ⊆ F`` and "F* is a filter" coincide.

    Also checks the double-dual identity, the two duality bridges and that
    ultrafilters are self-dual.  The first failing family is reported.
    """
    fams = enumerate_families(n) if families is None else families
    tallies = {"filter": 0, "partition_regular": 0, "ultrafilter": 0, "self_dual": 0}
    bad = None
    for F in fams:
        D = dual_family(F)
        s = structure_checks(F)
        sd = structure_checks(D)
        prod = _product_inside(F, D)
        tallies["filter"] += s["is_filter"]
        tallies["partition_regular"] += s["is_partition_regular"]
        tallies["ultrafilter"] += s["is_ultrafilter"]
        tallies["self_dual"] += D == F
        failed = []
        if not (s["is_partition_regular"] == prod == sd["is_filter"]):
            failed.append("equivalence")
        if dual_family(D) != F:
            failed.append("double_dual")
        if s["is_filter"] != sd["is_partition_regular"]:
            failed.append("filter_bridge")
        if s["is_ultrafilter"] and D != F:
            failed.append("ultrafilter_self_dual")
        if failed and bad is None:
            bad = {
                "family": F.to_json_obj(),
                "dual": D.to_json_obj(),
                "failed": failed,
                "partition_regular": s["is_partition_regular"],
                "product_inside": prod,
                "dual_is_filter": sd["is_filter"],
            }
    return RegularityReport(int(n), len(fams), tallies, bad)
