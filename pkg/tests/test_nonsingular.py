from fractions import Fraction

import numpy as np
import pytest

from rankone.cf import parse_alpha
from rankone.errors import GoldenTypeRejected, InvalidParameter, WitnessNotFound
from rankone.eigen import phase_exponent
from rankone.nonsingular import (
    build_ns_tower,
    eigen_phase_ns,
    generator_exponents,
    iii_0_fractions,
    iii_1_witnesses,
    iii_lambda_fractions,
    multiplicatively_independent,
    ratio_set_witness,
    rn_exponent,
)
from rankone.tower import PointCode, build_tower

from oracles import build_columns

SQRT2 = parse_alpha("sqrt2")
A_K = parse_alpha("[0; 1 (arith: 1*k+0)]")
HALF = Fraction(1, 2)


def test_piece_fractions():
    assert iii_lambda_fractions(2, HALF) == [Fraction(2, 3), Fraction(1, 3)]
    assert iii_lambda_fractions(3, HALF) == [Fraction(2, 5), Fraction(2, 5), Fraction(1, 5)]
    assert iii_lambda_fractions(1, HALF) == [Fraction(1)]
    assert iii_0_fractions(3) == [HALF, Fraction(1, 4), Fraction(1, 4)]


@pytest.mark.parametrize(
    "cf, variant, kw",
    [
        (SQRT2, "III_lambda", {"lam": HALF}),
        (A_K, "III_lambda", {"lam": Fraction(2, 3)}),
        (SQRT2, "III_1", {"lam": HALF, "beta": Fraction(1, 3)}),
        (A_K, "III_0", {}),
    ],
)
def test_levels_match_weighted_cutting(cf, variant, kw):
    N = 6
    ns = build_ns_tower(cf, variant, N, **kw)
    a = [cf.coefficient(k) for k in range(N + 1)]
    cols = build_columns(a, N, fractions=ns.fractions)
    for k in range(1, N + 1):
        got = [(I.lo, I.hi) for I in (ns.level_interval(k, ell) for ell in range(ns.height(k)))]
        assert got == cols[k]
        assert ns.measure(k) == sum(hi - lo for lo, hi in cols[k])


def test_width_conservation():
    ns = build_ns_tower(A_K, "III_lambda", 7, lam=Fraction(1, 3))
    for k in range(1, 7):
        assert sum(ns.fractions(k)) == 1


def test_transition_ratios_are_lambda_powers():
    ns = build_ns_tower(SQRT2, "III_lambda", 6, lam=HALF)
    for r in ns.transition_ratios(6):
        (e,) = generator_exponents(r, [HALF])
        assert r == HALF**e


def test_single_step_ratios_at_small_depth():
    ns = build_ns_tower(SQRT2, "III_lambda", 4, lam=HALF)
    assert set(ns.transition_ratios(4)) <= {1, HALF, 2}


def test_crossing_wide_to_narrow_is_one_lambda():
    ns = build_ns_tower(SQRT2, "III_lambda", 2, lam=HALF)
    # C_2: wide copy of C_1 at level 0, narrow copy at level 1
    r = rn_exponent(ns, PointCode(1, 0, (0,)), 1, 2)
    assert r.exponents == (1,) and r.ratio == HALF


def test_equal_width_step_exponent_zero():
    ns = build_ns_tower(SQRT2, "III_lambda", 4, lam=HALF)
    # C_3 widths 4/9, 2/9, 2/9, 1/9, 1/9: levels 1 and 2 have equal width
    assert rn_exponent(ns, ns.decode(3, 1), 1, 3).exponents == (0,)


def test_exponents_survive_refinement():
    ns = build_ns_tower(SQRT2, "III_lambda", 6, lam=HALF)
    for copy_start in (0, ns.height(4)):
        for ell in range(ns.height(4) - 1):
            a = rn_exponent(ns, ns.decode(4, ell), 1, 4)
            b = rn_exponent(ns, ns.decode(5, copy_start + ell), 1, 5)
            assert a.exponents == b.exponents


def test_wide_narrow_wide_nets_zero():
    ns = build_ns_tower(SQRT2, "III_lambda", 4, lam=HALF)
    # C_4 levels 2 -> 3 -> 4 -> 5 have ratios 1/2, 1, 2
    steps = [rn_exponent(ns, ns.decode(4, ell), 1, 4).exponents[0] for ell in (2, 3, 4)]
    assert steps == [1, 0, -1]
    assert rn_exponent(ns, ns.decode(4, 2), 3, 4).exponents == (0,)


def test_cocycle_identity_random_paths():
    ns = build_ns_tower(SQRT2, "III_lambda", 7, lam=HALF)
    rng = np.random.default_rng(2)
    top = ns.height(7)
    for _ in range(200):
        H = int(rng.integers(0, top - 2))
        n = int(rng.integers(0, top - 1 - H))
        m = int(rng.integers(0, top - H - n))
        first = rn_exponent(ns, ns.decode(7, H), n, 7)
        second = rn_exponent(ns, ns.decode(7, H + n), m, 7)
        both = rn_exponent(ns, ns.decode(7, H), n + m, 7)
        assert both.exponents[0] == first.exponents[0] + second.exponents[0]
        assert both.ratio == first.ratio * second.ratio


def test_negative_iterates_invert():
    ns = build_ns_tower(SQRT2, "III_lambda", 5, lam=HALF)
    fwd = rn_exponent(ns, ns.decode(5, 3), 7, 5)
    back = rn_exponent(ns, ns.decode(5, 10), -7, 5)
    assert back.exponents == (-fwd.exponents[0],)


def brute_witness_measure(cf, ns, k, n, target, D):
    """Measure of the levels of C_D inside A = base of C_k whose n-th image is in A with ratio target."""
    a = [cf.coefficient(i) for i in range(D + 1)]
    cols = build_columns(a, D, fractions=ns.fractions)
    lo, hi = cols[k][0]
    inside = [lo <= x and y <= hi for x, y in cols[D]]
    w = [y - x for x, y in cols[D]]
    total = Fraction(0)
    for r in range(len(cols[D]) - n):
        if inside[r] and inside[r + n] and w[r + n] / w[r] == target:
            total += w[r]
    return total


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_lambda_witness_every_stage(k):
    ns = build_ns_tower(SQRT2, "III_lambda", 8, lam=HALF)
    wit = ratio_set_witness(ns, k, 1)
    assert wit.n == SQRT2.q(k)
    assert wit.measure > 0
    assert wit.measure == brute_witness_measure(SQRT2, ns, k, wit.n, HALF, wit.depth)


def test_zero_exponent_witness_is_nontrivial():
    ns = build_ns_tower(SQRT2, "III_lambda", 8, lam=HALF)
    wit = ratio_set_witness(ns, 3, 0)
    assert wit.n == 7 and wit.measure > 0


def test_iii_1_witnesses_for_both_generators():
    ns = build_ns_tower(SQRT2, "III_1", 7, lam=HALF, beta=Fraction(1, 3))
    w = iii_1_witnesses(ns)
    assert w["lambda"].target == HALF and w["lambda"].measure > 0
    assert w["beta"].target == Fraction(1, 3) and w["beta"].measure > 0
    assert w["lambda"].stage == 1 and w["beta"].stage == 2


def test_iii_1_alternates_generators():
    ns = build_ns_tower(SQRT2, "III_1", 6, lam=HALF, beta=Fraction(1, 3))
    assert [ns.generator_of[k] for k in range(1, 6)] == [HALF, Fraction(1, 3)] * 2 + [HALF]
    for r in ns.transition_ratios(6):
        i, j = generator_exponents(r, [HALF, Fraction(1, 3)])
        assert r == HALF**i * Fraction(1, 3) ** j


def test_dependence_warning():
    with pytest.warns(UserWarning):
        ns = build_ns_tower(SQRT2, "III_1", 4, lam=Fraction(1, 4), beta=HALF)
    assert ns.warnings
    assert not multiplicatively_independent(Fraction(1, 4), HALF)
    assert multiplicatively_independent(HALF, Fraction(1, 3))


def test_iii_0_subsequence():
    ns = build_ns_tower(A_K, "III_0", 8)
    assert ns.subsequence == [2, 3, 4, 5, 6, 7]
    assert ns.fractions(3) == iii_0_fractions(3)


def test_witness_needs_a_cut():
    ns = build_ns_tower(A_K, "III_lambda", 5, lam=HALF)
    with pytest.raises(WitnessNotFound):
        ratio_set_witness(ns, 1, 1)


def test_parameter_errors():
    with pytest.raises(InvalidParameter):
        build_ns_tower(SQRT2, "III_lambda", 4, lam=1)
    with pytest.raises(InvalidParameter):
        build_ns_tower(SQRT2, "III_lambda", 4, lam=0)
    with pytest.raises(InvalidParameter):
        build_ns_tower(SQRT2, "III_0", 4)
    with pytest.raises(InvalidParameter):
        build_ns_tower(SQRT2, "III_2", 4, lam=HALF)
    with pytest.raises(GoldenTypeRejected):
        build_ns_tower(parse_alpha("golden"), "III_lambda", 4, lam=HALF)


def test_phase_is_width_independent():
    ns = build_ns_tower(SQRT2, "III_lambda", 6, lam=HALF)
    t = build_tower(SQRT2, 6)
    rng = np.random.default_rng(8)
    for _ in range(30):
        ell = int(rng.integers(0, t.height(6)))
        code = t.decode(6, ell)
        assert eigen_phase_ns(ns, code, 6).H == phase_exponent(t, code, 6).H == ell
    assert eigen_phase_ns(ns, PointCode(1, 0, ()), 6).H == 0


def test_witness_json():
    ns = build_ns_tower(SQRT2, "III_lambda", 6, lam=HALF)
    d = ratio_set_witness(ns, 3, 1).to_json(ns)
    assert d["lambda"] == "1/2" and d["n"] == 5 and d["exponent"] == 1
    assert Fraction(d["measure"]) > 0
