from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from ftrans import ConfigurationError, DomainError, RunSet
from ftrans.families import CERTIFIED, FAILS, HOLDS, verify
from ftrans.shifts import (
    CLASSES,
    CONSTRUCTIONS,
    ClassifyConfig,
    WeightSpec,
    classify_shift,
    compile_exponent_profile,
    effective_horizon,
    floor_log2,
    generate_weight,
    power_product_check,
    return_time_sets,
    ruler_sizes,
    salas_check,
    threshold_exponent,
    verify_classification,
)

H = 10**4


def constant(exponent, kind="unilateral"):
    return generate_weight("constant", {"exponent": exponent, "kind": kind})


# -- generation -----------------------------------------------------------------


def test_ruler_depth_two():
    w = generate_weight("p44_ruler", {"depth": 2, "horizon": 7})
    assert w.exponents(7) == [1, -1, 1, 1, -2, 1, -1]
    assert ruler_sizes(2)[0] == 7 == 3 * 2**2 - 2 - 3


@pytest.mark.parametrize("n", range(1, 12))
def test_ruler_sizes_closed_form(n):
    size, ones = ruler_sizes(n)
    assert size == 3 * 2**n - n - 3 == len(oracle.ruler_block(n))
    assert ones == 2**n - 1


def test_ruler_matches_printed_nested_prefix():
    # the nested prefix: block i is k twos then 2**-k with k = 1 + (2-adic valuation of i)
    def A(k):
        return [1] * k + [-k]

    printed = []
    for i in range(1, 16):
        printed += A(1 + ((i & -i).bit_length() - 1))
    w = generate_weight("p44_ruler", {"depth": 4})
    assert len(printed) == ruler_sizes(4)[0]
    assert w.exponents(len(printed)) == printed == oracle.ruler_block(4)


def test_ip_resets_up_to_twenty():
    w = generate_weight("p52_ip", {"horizon": 20})
    e = w.exponents(20)
    assert {i for i, x in enumerate(e, 1) if x != 1} == {4, 16, 20}
    assert e == oracle.p52(20)


def test_delta_seed_prefix():
    w = generate_weight("p54_delta", {"horizon": 30})
    e = w.exponents(30)
    assert [i for i, x in enumerate(e, 1) if x != 1] == [2, 5, 9, 14, 20, 27]


def test_unknown_construction():
    with pytest.raises(ConfigurationError):
        generate_weight("p99")


@pytest.mark.parametrize("name", CONSTRUCTIONS)
def test_exponents_match_literal_definitions(name):
    w = generate_weight(name, {"horizon": 3000})
    assert w.exponents(3000) == oracle.EXPONENTS[name](3000)


@pytest.mark.parametrize("name", CONSTRUCTIONS + ("constant", "mirror"))
def test_json_round_trip(name):
    w = generate_weight(name, {"horizon": 2000})
    text = w.to_json()
    v = WeightSpec.from_json(text)
    assert v.to_json() == text
    assert v.exponents(2000) == w.exponents(2000)
    if w.kind == "bilateral":
        assert v.left_exponents(500) == w.left_exponents(500)
    assert v.program == w.program


def test_json_keeps_huge_segments_exact():
    w = generate_weight("p41_2")
    v = WeightSpec.from_json(w.to_json())
    assert max(L for blk in v.program for L, _ in blk) > 10**100
    assert v.min_horizon == w.min_horizon > 10**200


# -- exponent profile -------------------------------------------------------------


def test_bd1_profile_returns_to_zero():
    prof = compile_exponent_profile(generate_weight("bd1_nonmixing", {"horizon": 100}), 100)
    assert [prof.E(p) for p in (1, 3, 6, 10, 15)] == [0, 0, 0, 0, 0]
    assert prof.level_positions(0, 1, 100) == RunSet.from_elements(k * (k + 1) // 2 for k in range(1, 14))


def test_ip_profile_vanishes_exactly_on_base():
    prof = compile_exponent_profile(generate_weight("p52_ip", {"horizon": 5000}), 5000)
    base = oracle.ip_base(5000)
    assert all(prof.E(b) == 0 for b in base)
    last = 0
    for n in range(1, 5001):
        if n in base:
            last = n
        else:
            assert prof.E(n) == n - last > 0


def test_constant_profile():
    prof = compile_exponent_profile(constant(1), 10**30)
    assert prof.E(10**30) == 10**30
    assert prof.E(12345) == 12345


def test_profile_agrees_with_prefix_sums_vectorised():
    e = oracle.p58(4000)
    prof = compile_exponent_profile(generate_weight("p58_rhc", {"horizon": 4000}), 4000)
    assert prof.E(list(range(4001))).tolist() == oracle.prefix_products(e)


def test_profile_outside_domain_is_an_error():
    prof = compile_exponent_profile(generate_weight("bd1_nonmixing", {"horizon": 100}), 100)
    with pytest.raises(ConfigurationError):
        prof.E(10**6)


def test_threshold_reduction():
    assert threshold_exponent(1) == 0 and threshold_exponent(Fraction(3, 2)) == 0
    assert threshold_exponent(2) == 1 and threshold_exponent(Fraction(7, 2)) == 1
    assert floor_log2(Fraction(1, 3)) == -2 and floor_log2(2**100) == 100
    with pytest.raises(DomainError):
        floor_log2(0)


# -- return-time sets -------------------------------------------------------------


def test_bd1_first_return_set():
    fwd = return_time_sets(generate_weight("bd1_nonmixing", {"horizon": 30}), 0, 0, 30).forward
    assert set(fwd) == {2, 4, 5, 7, 8, 9, 11, 12, 13, 14, 16, 17, 18, 19, 20, 22, 23, 24, 25, 26, 27, 29, 30}


def test_ip_first_return_set():
    rs = return_time_sets(generate_weight("p52_ip", {"horizon": 20}), 0, 0, 20)
    assert rs.forward == RunSet.interval(1, 21).difference(RunSet.from_elements([4, 16, 20]))
    assert not rs.backward_defined and rs.both() == rs.forward


@pytest.mark.parametrize("t", [0, 1, 5, 40])
def test_constant_two(t):
    assert return_time_sets(constant(1), t, 0, 1000).forward == RunSet.interval(t + 1, 1001)
    rs = return_time_sets(constant(1, "bilateral"), t, 3, 1000)
    assert rs.forward == RunSet.interval(t + 1, 1001)
    assert rs.backward.is_empty()


def test_negative_offset_on_unilateral():
    with pytest.raises(DomainError):
        return_time_sets(constant(1), 0, -1, 10)


def test_horizon_beyond_program():
    w = generate_weight("explicit", {"segments": [[5, 1]]})
    with pytest.raises(ConfigurationError):
        compile_exponent_profile(w, 100)


@pytest.mark.parametrize("name", CONSTRUCTIONS)
def test_unilateral_sets_match_brute_force(name):
    w = generate_weight(name, {"horizon": H})
    e = oracle.EXPONENTS[name](H + 8)
    ws = oracle.weights(e)
    for t in (0, 2):
        for j in (0, 5):
            got = return_time_sets(w, t, j, H).forward
            assert set(got) == oracle.forward_set(ws, t, j, H), (t, j)


@pytest.mark.parametrize("name", ["bd1_nonmixing", "p44_ruler", "p54_delta", "p58_rhc"])
def test_mirror_sets_match_brute_force(name):
    w = generate_weight("mirror", {"base": name, "horizon": H})
    e = oracle.EXPONENTS[name](H + 8)
    ws = oracle.weights(e)

    def get(i):
        # w_{1-i} = 1 / w_i
        return ws[i - 1] if i >= 1 else 1 / ws[-i]

    for t in (0, 3):
        for j in (-4, 0, 4):
            rs = return_time_sets(w, t, j, H)
            assert set(rs.forward) == oracle.forward_set(None, t, j, H, index=get), (t, j)
            assert set(rs.backward) == oracle.backward_set(get, t, j, H), (t, j)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(st.integers(1, 30), st.integers(-4, 4)), min_size=1, max_size=12),
    st.lists(st.tuples(st.integers(1, 30), st.integers(-4, 4)), min_size=1, max_size=12),
    st.integers(0, 4),
    st.integers(-6, 6),
)
def test_explicit_bilateral_against_brute_force(right, left, t, j):
    w = generate_weight(
        "explicit", {"segments": right, "left_segments": left, "kind": "bilateral", "repeat": True}
    )
    h = 200
    re = w.exponents(h + 10)
    le = w.left_exponents(h + 10)

    def get(i):
        return Fraction(2) ** (re[i - 1] if i >= 1 else le[-i])

    rs = return_time_sets(w, t, j, h)
    assert set(rs.forward) == oracle.forward_set(None, t, j, h, index=get)
    assert set(rs.backward) == oracle.backward_set(get, t, j, h)


@pytest.mark.parametrize("name", CONSTRUCTIONS)
def test_monotone_in_threshold(name):
    w = generate_weight("mirror", {"base": name, "horizon": 2 * H})
    prof = compile_exponent_profile(w, 2 * H, 2 * H)
    for j in (-3, 0, 3):
        prev = None
        for t in range(0, 6):
            rs = return_time_sets(prof, t, j, H)
            if prev is not None:
                assert rs.forward.issubset(prev.forward) and rs.backward.issubset(prev.backward)
            prev = rs


def _absorbing_level(prof, t1, j1, t2, j2, j3, horizon):
    """A level for offset j3 whose forward set sits inside both given ones.

    E(j+n) - E(j) = [E(j3+n) - E(j3)] + [E(j3) - E(j)] - [E(j3+n) - E(j+n)], and the
    last bracket is at most (j3 - j) times the largest single exponent.
    """
    lo = min(j1, j2) + 1
    top = max(prof.slope[(prof.pos[1:] >= lo) & (prof.pos[:-1] <= j3 + horizon)].tolist())
    top = max(top, 0)
    return max(t + prof.E(j) - prof.E(j3) + (j3 - j) * top for t, j in ((t1, j1), (t2, j2)))


@pytest.mark.parametrize("name", ["bd1_nonmixing", "p44_ruler", "p52_ip", "p54_delta", "p58_rhc"])
def test_filter_base_absorption(name):
    w = generate_weight("mirror", {"base": name, "horizon": 3000})
    prof = compile_exponent_profile(w, 4000, 4000)
    h = 3000
    nonempty = 0
    for j1 in (-2, 0, 2):
        for j2 in (-1, 1):
            for t1, t2 in ((0, 0), (0, 2), (3, 1)):
                j3 = max(abs(j1), abs(j2)) + 1
                t3 = _absorbing_level(prof, t1, j1, t2, j2, j3, h)
                A3 = prof.forward_set(t3, j3, h)
                both = prof.forward_set(t1, j1, h).intersect(prof.forward_set(t2, j2, h))
                assert A3.issubset(both)
                nonempty += not A3.is_empty()
    assert nonempty > 0


# -- hypercyclicity ------------------------------------------------------------------


def test_salas_examples():
    assert salas_check(constant(-1), 0, 0, 1000).status == FAILS
    bd1 = generate_weight("bd1_nonmixing", {"horizon": 10**5})
    for t in range(11):
        v = salas_check(bd1, t, 0, 10**5)
        assert v.holds
        n = v.witness["n"]
        assert oracle.prefix_products(oracle.bd1(n))[n] >= t + 1
    rhc = generate_weight("p58_rhc", {"horizon": 10**5})
    assert salas_check(rhc, 3, 0, 10**5).holds


def test_salas_bilateral():
    assert salas_check(generate_weight("mirror", {"horizon": 10**4}), 2, 3, 10**4).holds
    assert salas_check(constant(1, "bilateral"), 0, 1, 1000).status == FAILS


# -- classification ------------------------------------------------------------------


def test_bd1_classification():
    r = classify_shift(generate_weight("bd1_nonmixing", {"horizon": 10**5}), 10**5)
    assert set(r) == set(CLASSES)
    assert r["mixing"].status == FAILS
    assert r["BD_lower_1"].status == HOLDS


def test_p41_3_classification():
    w = generate_weight("p41_3", {"horizon": 10**5})
    r = classify_shift(w, 10**5, ClassifyConfig(classes=("D_lower_1", "topologically_ergodic")))
    assert r["D_lower_1"].status == HOLDS
    assert r["topologically_ergodic"].status == FAILS


def test_p54_classification():
    w = generate_weight("p54_delta", {"horizon": 10**5})
    r = classify_shift(w, 10**5, ClassifyConfig(classes=("delta_star", "mixing")))
    assert r["delta_star"].status == HOLDS
    assert r["mixing"].status == FAILS


def test_periodic_profiles_are_certified():
    up = classify_shift(constant(1), 1000)
    assert all(v.status == CERTIFIED for v in up.values())
    down = classify_shift(constant(-1), 1000)
    assert all(v.status == FAILS for v in down.values())
    both = classify_shift(constant(1, "bilateral"), 1000)
    assert all(v.status == FAILS for v in both.values())
    assert verify_classification(constant(1), up, 1000) == []


def test_bilateral_mirror_is_transitive():
    w = generate_weight("mirror", {"horizon": 10**4})
    r = classify_shift(w, 10**4, ClassifyConfig(classes=("transitive", "mixing")))
    assert r["transitive"].holds and r["mixing"].status == FAILS


def test_horizon_too_small():
    with pytest.raises(ConfigurationError, match="64"):
        classify_shift(generate_weight("bd1_nonmixing", {"horizon": 100}), 10)


@pytest.mark.parametrize("name", CONSTRUCTIONS)
def test_classification_verifies(name):
    w = generate_weight(name, {"horizon": H})
    r = classify_shift(w, H)
    assert verify_classification(w, r, H) == []
    flipped = dict(r)
    v = r["mixing"]
    flipped["mixing"] = type(v)(v.family, HOLDS if v.status == FAILS else FAILS, v.horizon, v.witness, v.params)
    assert verify_classification(w, flipped, H) == ["mixing"]


@pytest.mark.parametrize("name", CONSTRUCTIONS)
def test_roster_weak_mixing_iff_unbounded(name):
    w = generate_weight(name, {"horizon": H})
    cfg = ClassifyConfig(classes=("weakly_mixing",))
    he = effective_horizon(w, H)
    unbounded = compile_exponent_profile(w, he).max_E(1, he) > max(cfg.t_grid)
    assert classify_shift(w, H, cfg)["weakly_mixing"].holds == unbounded


def test_roster_bounded_products():
    # E oscillates in {0, 1}: sup of the products is 2, never weakly mixing
    w = generate_weight("explicit", {"segments": [[1, 1], [1, -1]], "repeat": True})
    v = classify_shift(w, 1000, ClassifyConfig(classes=("weakly_mixing",)))["weakly_mixing"]
    assert not v.holds


# -- power products ---------------------------------------------------------------------


@pytest.mark.parametrize("family", ["syndetic", "topologically_ergodic", "delta_star", "D_lower_1"])
def test_power_one_is_plain_classification(family):
    w = generate_weight("p54_delta", {"horizon": H})
    v = power_product_check(w, 1, family, H)
    cls = {"syndetic": "topologically_ergodic"}.get(family, family)
    assert v == classify_shift(w, H, ClassifyConfig(classes=(cls,)))[cls]


def test_power_of_constant_two():
    assert power_product_check(constant(1), 2, "syndetic", 1000).status in (HOLDS, CERTIFIED)
    w = generate_weight("explicit", {"segments": [[10**6, 1]]})
    v = power_product_check(w, 2, "syndetic", 1000)
    assert v.holds


def test_power_of_bd1_is_computed():
    w = generate_weight("bd1_nonmixing", {"horizon": H})
    v = power_product_check(w, 2, "syndetic", H, ClassifyConfig(t_grid=(0,)))
    sub = v.witness["sub"][0]["verdict"]
    assert sub.horizon == H // 2
    assert verify(sub, return_time_sets(w, 0, 0, H).forward.contract(2).truncate(H // 2))


def test_power_errors():
    with pytest.raises(DomainError):
        power_product_check(constant(1), 0, "syndetic", 100)
    with pytest.raises(ConfigurationError):
        power_product_check(constant(1), 2, "nonsense", 100)
