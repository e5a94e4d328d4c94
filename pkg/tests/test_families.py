from __future__ import annotations

import random
from fractions import Fraction

import pytest

import oracle
from ftrans import ConfigurationError, DomainError, RunSet
from ftrans.families import (
    FAILS,
    FAMILIES,
    HOLDS,
    Verdict,
    corrupt,
    delta_verdict,
    difference_set,
    family_transform,
    finite_sums,
    ip_verdict,
    membership_verdict,
    verify,
)


def evens(h):
    return RunSet.from_elements(range(2, h + 1, 2))


def odds(h):
    return RunSet.from_elements(range(1, h + 1, 2))


def ip_base(h):
    return RunSet.from_elements(oracle.ip_base(h))


def delta_complement(h):
    return RunSet.from_elements(oracle.delta_base(h)).complement(h)


def random_set(rng, h, density):
    runs = []
    pos = 1
    while pos <= h:
        L = rng.randint(1, 12)
        if rng.random() < density:
            runs.append((pos, pos + L))
        pos += L
    return RunSet(runs)


def thick_set(h):
    runs = []
    pos = 1
    L = 1
    while pos <= h:
        runs.append((pos, pos + L))
        pos += L + 5
        L += 1
    return RunSet(runs)


# -- membership examples --------------------------------------------------------


def test_evens_syndetic():
    v = membership_verdict(evens(10**4), "syndetic", 10**4)
    assert v.status == HOLDS and v.witness["gap"] == 2
    assert verify(v, evens(10**4))


def test_complement_of_finite_sums_is_syndetic():
    H = 10**5
    B = ip_base(H)
    v = membership_verdict(B.complement(H), "syndetic", H)
    assert v.status == HOLDS and v.witness["gap"] == 2
    assert all(b + 1 not in B for b in B)


def test_finite_sums_not_piecewise_syndetic():
    H = 10**6
    B = ip_base(H)
    v = membership_verdict(B, "piecewise_syndetic", H)
    assert v.status == FAILS
    assert verify(v, B)


def test_unknown_family():
    with pytest.raises(ConfigurationError):
        membership_verdict(evens(100), "bounded", 100)
    with pytest.raises(ConfigurationError):
        membership_verdict(evens(100), "syndetic", 100, {"gmax": 3})


def test_thick_threshold():
    H = 10**4
    assert membership_verdict(thick_set(H), "thick", H).holds
    assert not membership_verdict(evens(H), "thick", H).holds
    v = membership_verdict(thick_set(H), "BD_upper_1", H)
    assert v.holds


def test_cofinite_tail():
    H = 10**4
    A = RunSet([(1, 100), (101, H + 1)])
    assert membership_verdict(A, "cofinite", H).holds
    late = RunSet([(1, 9000), (9001, H + 1)])
    assert not membership_verdict(late, "cofinite", H).holds


def test_density_families():
    H = 10**4
    E = evens(H)
    assert membership_verdict(E, "D_upper_pos", H).holds
    assert membership_verdict(E, "D_lower_pos", H).holds
    assert not membership_verdict(E, "D_upper_1", H).holds
    assert membership_verdict(E, "D_upper_1", H, {"epsilon": Fraction(1, 2)}).holds
    assert membership_verdict(E, "BD_lower_pos", H).holds
    assert not membership_verdict(E, "BD_lower_1", H).holds


# -- IP ----------------------------------------------------------------------------


def test_complement_of_finite_sums_not_ip_star():
    H = 10**5
    A = ip_base(H).complement(H)
    gens = [4**n for n in range(1, 7)]
    v = ip_verdict(A, "misses_FS", generators=gens, horizon=H)
    assert v.status == FAILS and v.family == "IP_star"
    assert verify(v, A)
    contained = ip_verdict(ip_base(H), "contains_FS", generators=gens, horizon=H)
    assert contained.holds and verify(contained, ip_base(H))


def test_full_interval_contains_every_fs():
    H = 1000
    full = RunSet.interval(1, H + 1)
    for gens in ([1], [3, 7, 100], [5, 600, 900]):
        v = ip_verdict(full, "contains_FS", generators=gens, horizon=H)
        assert v.holds and verify(v, full)
    assert ip_verdict(full, "contains_FS", generators=[600, 900], horizon=H).witness["overflow"] == 1


@pytest.mark.parametrize("depth", [2, 3])
def test_evens_are_ip_star(depth):
    H = 10**4
    v = ip_verdict(evens(H), "misses_FS", depth=depth, horizon=H, min_generator=1)
    assert v.holds and verify(v, evens(H))


def test_ip_search_finds_fs_in_gapped_complement():
    H = 10**4
    A = ip_base(H).complement(H)
    v = ip_verdict(A, "misses_FS", depth=3, horizon=H, min_generator=1)
    assert v.status == FAILS
    fs = v.witness["fs"]
    assert fs and not any(x in A for x in fs)


def test_finite_sums():
    assert finite_sums([1, 2, 4]) == (list(range(1, 8)), 0)
    assert finite_sums([4, 16], 18) == ([4, 16], 1)


# -- Delta ---------------------------------------------------------------------------


def test_evens_contain_their_difference_set():
    H = 10**4
    seed = list(range(2, H + 1, 2))
    v = delta_verdict(evens(H), "contains_diffset", seed=seed, horizon=H)
    assert v.holds and v.witness["differences"] == evens(H - 2)
    assert verify(v, evens(H))


def test_odds_not_delta_star():
    H = 10**4
    v = delta_verdict(odds(H), "dual_evidence", horizon=H)
    assert v.status == FAILS and 2 in v.witness["growing"]
    assert verify(v, odds(H))


def test_delta_base_complement_is_delta_star():
    H = 10**5
    A = delta_complement(H)
    v = delta_verdict(A, "dual_evidence", horizon=H, v_max=50)
    assert v.holds and verify(v, A)
    assert v.witness["v_min"] == 1
    # a difference of the seed is a sum of consecutive integers >= 3, so small
    # values repeat a bounded number of times (up to 5 below 50, e.g. 45)
    seed = sorted(oracle.delta_base(H))
    members = set(seed)
    brute = {u: sum(1 for b in seed if b + u in members and b + u <= H) for u in range(1, 51)}
    assert [row[2] for row in v.witness["table"]] == [brute[u] for u in range(1, 51)]
    assert v.witness["max_multiplicity"] == max(brute.values()) == 5
    assert v.witness["growing"] == []


def test_seed_must_increase():
    with pytest.raises(DomainError):
        delta_verdict(evens(100), "contains_diffset", seed=[2, 2, 5], horizon=100)
    with pytest.raises(DomainError):
        difference_set([5, 3], 100)


def test_difference_set_brute_force():
    rng = random.Random(11)
    seed = sorted(rng.sample(range(1, 3000), 80))
    H = 2000
    expect = {b - a for a in seed for b in seed if 0 < b - a <= H}
    assert set(difference_set(seed, H)) == expect


# -- transforms ---------------------------------------------------------------------------


def test_tilde_of_syndetic_is_thickly_syndetic():
    H = 10**4
    A = RunSet([(k, k + 7) for k in range(1, H + 10, 10)])
    v = family_transform(A, "syndetic", "tilde", N_max=2, horizon=H)
    assert v.holds and verify(v, A)
    ts = membership_verdict(A, "thickly_syndetic", H, {"N_max": 2})
    assert ts.holds and verify(ts, A)


def test_tilde_thick_of_evens_fails():
    H = 10**4
    assert evens(H).shrink(1, H).is_empty()
    v = family_transform(evens(H), "thick", "tilde", N_max=1, horizon=H)
    assert v.status == FAILS and verify(v, evens(H))


def test_plus_with_zero_shift_is_plain_membership():
    H = 10**4
    for A in (evens(H), thick_set(H), ip_base(H)):
        for fam in ("syndetic", "thick", "D_lower_pos"):
            v = family_transform(A, fam, "plus", K=0, horizon=H)
            assert v.witness["sub"][0]["verdict"] == membership_verdict(A, fam, H)
            assert v.holds == membership_verdict(A, fam, H).holds


def test_bullet_and_plus_shifts():
    H = 10**4
    A = RunSet([(1, 5000)])
    plus = family_transform(A, "D_upper_pos", "plus", K=2, horizon=H)
    bullet = family_transform(evens(H), "syndetic", "bullet", K=2, horizon=H)
    assert plus.holds and bullet.holds
    assert verify(plus, A) and verify(bullet, evens(H))


def test_thickly_syndetic_closed_under_intersection():
    H = 10**4
    A = RunSet([(k, k + 9) for k in range(1, H + 10, 12)])
    B = RunSet([(k, k + 40) for k in range(1, H + 50, 45)])
    p = {"N_max": 2}
    assert membership_verdict(A, "thickly_syndetic", H, p).holds
    assert membership_verdict(B, "thickly_syndetic", H, p).holds
    assert membership_verdict(A.intersect(B), "thickly_syndetic", H, p).holds


# -- witness soundness ----------------------------------------------------------------------


def _sample_sets(H):
    rng = random.Random(5)
    return [
        evens(H),
        odds(H),
        thick_set(H),
        ip_base(H),
        ip_base(H).complement(H),
        delta_complement(H),
        RunSet.interval(1, H + 1),
        RunSet([(1, 3)]),
        RunSet(),
        random_set(rng, H, 0.5),
        random_set(rng, H, 0.9),
    ]


def _perturb(x):
    if isinstance(x, bool):
        return not x
    if isinstance(x, int):
        return x + 10**9 + 7
    if isinstance(x, Fraction):
        return x + 1
    if isinstance(x, str):
        return x + "?"
    if isinstance(x, list):
        return x[:-1] if x else [1]
    if isinstance(x, RunSet):
        return x.union(RunSet.from_elements([10**9]))
    return None


def _verdicts(A, H):
    out = [membership_verdict(A, fam, H) for fam in FAMILIES]
    blocks = [H // 8 * k for k in range(1, 9)]
    out += [membership_verdict(A, fam, H, {"blocks": blocks}) for fam in ("syndetic", "thick", "BD_lower_pos", "BD_upper_1")]
    out.append(delta_verdict(A, "dual_evidence", horizon=H))
    out.append(ip_verdict(A, "misses_FS", depth=2, horizon=H))
    out.append(ip_verdict(A, "contains_FS", generators=[3, 40, 500], horizon=H))
    out.append(family_transform(A, "syndetic", "tilde", N_max=1, horizon=H))
    out.append(family_transform(A, "thick", "bullet", K=1, horizon=H))
    return out


def test_witnesses_verify_and_corruptions_are_rejected():
    H = 4096
    checked = rejected = 0
    for A in _sample_sets(H):
        for v in _verdicts(A, H):
            assert verify(v, A), (v.family, v.status, v.witness)
            assert verify(Verdict.from_json(v.to_json()), A)
            flipped = Verdict(v.family, FAILS if v.holds else HOLDS, v.horizon, v.witness, v.params)
            assert not verify(flipped, A), (v.family, v.witness)
            for key, value in v.witness.items():
                bad = _perturb(value)
                if bad is None:
                    continue
                checked += 1
                assert not verify(corrupt(v, key, bad), A), (v.family, v.status, key)
                rejected += 1
    assert checked == rejected > 100


def test_verify_survives_malformed_witness():
    v = membership_verdict(evens(100), "syndetic", 100)
    assert not verify(Verdict(v.family, v.status, v.horizon, {}, v.params), evens(100))


# -- hierarchy consistency -----------------------------------------------------------------


@pytest.mark.parametrize("seed", range(12))
def test_hierarchy_implications(seed):
    H = 10**4
    rng = random.Random(seed)
    sets = _sample_sets(H) if seed == 0 else [random_set(rng, H, rng.choice([0.3, 0.7, 0.95]))]
    p = {"s": 50, "delta_banach": Fraction(1, 50)}
    for A in sets:
        v = {fam: membership_verdict(A, fam, H, p).holds for fam in FAMILIES}
        if v["cofinite"]:
            assert v["syndetic"] and v["thick"]
        if v["thickly_syndetic"]:
            assert v["syndetic"]
        if v["D_lower_1"]:
            assert v["D_upper_1"] and v["D_lower_pos"]


def test_syndetic_matches_lower_banach_positivity():
    # with the window length equal to the gap bound both sides see the same sets
    H = 10**4
    s = 100
    rng = random.Random(2)
    sets = _sample_sets(H) + [random_set(rng, H, d) for d in (0.1, 0.3, 0.6)]
    sets.append(RunSet([(k, k + 1) for k in range(1, H + 1, 150)]))
    p = {"g_max": s, "s": s, "delta_banach": Fraction(1, s)}
    for A in sets:
        syn = membership_verdict(A, "syndetic", H, p).holds
        bd = membership_verdict(A, "BD_lower_pos", H, p).holds
        assert syn == bd


def test_thick_matches_full_upper_banach():
    H = 10**4
    s = 100
    p = {"L_req": s, "s": s, "epsilon": Fraction(0)}
    for A in _sample_sets(H):
        assert membership_verdict(A, "thick", H, p).holds == membership_verdict(A, "BD_upper_1", H, p).holds


@pytest.mark.parametrize("seed", range(10))
def test_monotone_under_inclusion(seed):
    H = 5000
    rng = random.Random(100 + seed)
    A = random_set(rng, H, 0.6)
    B = A.union(random_set(rng, H, 0.3))
    for fam in FAMILIES:
        if membership_verdict(A, fam, H).holds:
            assert membership_verdict(B, fam, H).holds, fam


# -- Delta* evidence implies syndetic on the example sets ------------------------------------


def test_delta_star_sets_are_syndetic():
    H = 10**5
    sets = [
        delta_complement(H),
        delta_complement(H).intersect(delta_complement(H).shift_minus(1)),
        ip_base(H).complement(H),
        evens(H),
    ]
    for A in sets:
        if delta_verdict(A, "dual_evidence", horizon=H).holds:
            assert membership_verdict(A, "syndetic", H).holds


@pytest.mark.parametrize("seed", range(100))
def test_difference_sets_of_dense_sets_are_delta_star(seed):
    rng = random.Random(seed)
    H = 3000
    # every block of 10 holds at least 2 random elements, so windows have density >= 0.2 - 2/s
    xs = []
    # materialize A to 2H so every difference up to H has room to appear
    for base in range(0, 2 * H, 10):
        xs += [base + x for x in rng.sample(range(1, 11), rng.randint(2, 9))]
    A = RunSet.from_elements(xs)
    assert A.window_extrema(100, 0, 2 * H - 100)[0] >= 18
    D = difference_set(list(A), H)
    v = delta_verdict(D, "dual_evidence", horizon=H)
    assert v.holds, v.witness
