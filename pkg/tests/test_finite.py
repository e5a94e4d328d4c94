from __future__ import annotations

import json
from itertools import combinations

import pytest

import ftrans.finite as fin
from ftrans import ConfigurationError, DomainError
from ftrans.finite import (
    FiniteFamily,
    dual_family,
    enumerate_families,
    family_product,
    product_within,
    structure_checks,
    verify_lemma23,
)


def all_subsets(n):
    return range(1, 1 << n)


def brute_families(n):
    """Upward-closed non-empty collections of non-empty subsets, by direct enumeration."""
    out = set()
    subsets = list(all_subsets(n))
    for r in range(1, len(subsets) + 1):
        for members in combinations(subsets, r):
            ms = set(members)
            if all(b in ms for a in ms for b in subsets if a & b == a):
                out.add(frozenset(ms))
    return out


def brute_dual(F: FiniteFamily):
    n = F.universe_size
    members = set(F.members.tolist())
    return {a for a in all_subsets(n) if all(a & b for b in members)}


def brute_pr(F: FiniteFamily):
    members = set(F.members.tolist())
    for a in members:
        b = a
        while True:
            if b not in members and (a & ~b) not in members:
                return False
            if b == 0:
                break
            b = (b - 1) & a
    return True


def brute_filter(F: FiniteFamily):
    members = set(F.members.tolist())
    return all(a & b in members for a in members for b in members)


@pytest.mark.parametrize("n,count", [(1, 1), (2, 4), (3, 18), (4, 166), (5, 7579)])
def test_family_counts(n, count):
    fams = enumerate_families(n)
    assert len(fams) == count
    assert len({f.minimal_sets for f in fams}) == count


@pytest.mark.parametrize("n", [1, 2, 3])
def test_enumeration_matches_brute_force(n):
    got = {frozenset(f.members.tolist()) for f in enumerate_families(n)}
    assert got == brute_families(n)


def test_n2_antichains():
    got = sorted(f.minimal_sets for f in enumerate_families(2))
    assert got == sorted([(1,), (2,), (1, 2), (3,)])


def test_exhaustive_cap_and_sampled_mode():
    with pytest.raises(ConfigurationError, match="sampled"):
        enumerate_families(6)
    fams = enumerate_families(6, mode="sampled", samples=200, seed=4)
    assert len(fams) == 200
    assert fams == enumerate_families(6, mode="sampled", samples=200, seed=4)
    report = verify_lemma23(6, fams)
    assert report.ok and report.families == 200


def test_antichain_validation():
    with pytest.raises(DomainError):
        FiniteFamily(3, (1, 3))
    with pytest.raises(DomainError):
        FiniteFamily(3, ())
    with pytest.raises(DomainError):
        FiniteFamily(3, (0,))
    with pytest.raises(DomainError):
        FiniteFamily.upward(3, [[4]])
    with pytest.raises(ConfigurationError):
        FiniteFamily(7, (1,))


def test_principal_ultrafilter():
    F = FiniteFamily.upward(4, [[1]])
    assert dual_family(F) == F
    assert structure_checks(F) == {"is_filter": True, "is_partition_regular": True, "is_ultrafilter": True}


def test_all_nonempty_subsets():
    n = 4
    F = FiniteFamily.upward(n, [[i] for i in range(1, n + 1)])
    assert len(F) == 2**n - 1
    assert dual_family(F) == FiniteFamily.upward(n, [list(range(1, n + 1))])
    assert structure_checks(F) == {"is_filter": False, "is_partition_regular": True, "is_ultrafilter": False}


def test_pair_filter_not_partition_regular():
    F = FiniteFamily.upward(2, [[1, 2]])
    assert structure_checks(F) == {"is_filter": True, "is_partition_regular": False, "is_ultrafilter": False}


def test_product_examples():
    F1 = FiniteFamily.upward(3, [[1]])
    F2 = FiniteFamily.upward(3, [[2]])
    P = family_product(F1, F2)
    assert 0 in P
    filt = FiniteFamily.upward(3, [[1, 2]])
    assert product_within(family_product(filt, filt), filt)
    with pytest.raises(DomainError):
        family_product(F1, FiniteFamily.upward(2, [[1]]))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_product_contains_first_factor_upward(n):
    fams = enumerate_families(n)
    for F1 in fams[:: max(1, len(fams) // 30)]:
        for F2 in fams[:: max(1, len(fams) // 15)]:
            P = family_product(F1, F2)
            # every member of F1 lies above some member of F1 . F2
            assert all(any(p & a == p for p in P) for a in F1.members.tolist())


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_duality_identities(n):
    for F in enumerate_families(n):
        D = dual_family(F)
        assert set(D.members.tolist()) == brute_dual(F)
        assert dual_family(D) == F
        s, sd = structure_checks(F), structure_checks(D)
        assert s["is_filter"] == brute_filter(F)
        assert s["is_partition_regular"] == brute_pr(F)
        assert s["is_partition_regular"] == sd["is_filter"]
        assert s["is_filter"] == sd["is_partition_regular"]
        if s["is_partition_regular"]:
            assert product_within(family_product(F, D), F)
        if s["is_ultrafilter"]:
            assert D == F


@pytest.mark.parametrize("n", [3, 4])
def test_regularity_report(n):
    rep = verify_lemma23(n)
    assert rep.ok and rep.counterexample is None
    assert rep.families == len(enumerate_families(n))
    t = rep.tallies
    assert t["ultrafilter"] == n  # only principal ultrafilters on a finite set
    assert t["filter"] == 2**n - 1  # one principal filter per non-empty set
    assert t["partition_regular"] == t["filter"]
    obj = rep.to_json_obj()
    assert json.loads(json.dumps(obj))["counterexample"] is None


def test_regularity_report_flags_a_counterexample(monkeypatch):
    F = FiniteFamily.upward(3, [[1], [2]])
    assert verify_lemma23(3, [F]).ok
    monkeypatch.setattr(fin, "dual_family", lambda G: FiniteFamily.upward(3, [[1, 2, 3]]))
    bad = verify_lemma23(3, [F])
    assert not bad.ok and "double_dual" in bad.counterexample["failed"]


def test_json_form():
    F = FiniteFamily.upward(3, [[1], [2, 3]])
    assert F.to_json_obj() == {"universe_size": 3, "minimal_sets": [1, 6]}
    assert sorted(map(sorted, F.sets()))[:2] == [[1], [1, 2]]
