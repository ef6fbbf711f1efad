"""The acceptance gate: one test and one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the lines as
they happen; they are also repeated in the terminal summary).
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from rankone.cf import FracMultiple, classify, parse_alpha
from rankone.dynamics import (
    LevelRef,
    eigenvalue_screen,
    escape_ratios,
    levels_up_to,
    return_ratio_push,
    rigidity_scan,
)
from rankone.eigen import (
    chord_bounds,
    default_depth,
    eigen_check,
    injectivity_screen,
    pushforward_histogram,
    random_code,
    tail_bound,
)
from rankone.gk import montecarlo
from rankone.nonsingular import build_ns_tower, iii_1_witnesses, ratio_set_witness, rn_exponent
from rankone.tower import build_tower

from conftest import ACCEPTANCE_LINES

SQRT2 = parse_alpha("sqrt2")
SQRT3 = parse_alpha("sqrt3")
GOLDEN = parse_alpha("golden")
A_K = parse_alpha("[0; 1 (arith: 1*k+0)]")


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_convergent_recursion():
    t0 = time.perf_counter()
    ok = True
    for cf in (SQRT2, SQRT3, GOLDEN, A_K):
        for k in range(2, 51):
            ok &= cf.q(k) == cf.coefficient(k - 1) * cf.q(k - 1) + cf.q(k - 2)
            ok &= cf.p(k) == cf.coefficient(k - 1) * cf.p(k - 1) + cf.p(k - 2)
        for k in range(0, 50):
            ok &= math.gcd(cf.q(k), cf.q(k + 1)) == 1
            ok &= cf.p(k + 1) * cf.q(k) - cf.p(k) * cf.q(k + 1) == (-1) ** (k + 1)
    dt = time.perf_counter() - t0
    report(1, ok and dt < 1, f"recursion, coprimality and determinant exact to k=50 for 4 inputs ({dt:.3f}s < 1s)")


def test_criterion_2_finiteness_classifier():
    t0 = time.perf_counter()
    c = classify(SQRT2, 50)
    sums_ok = all(c.partial_sums[W - 2] == Fraction(W - 1, 4) for W in range(2, 51))
    mus = c.partial_products
    mu_ok = all(mus[k - 1] == Fraction(SQRT2.q(k), 2 ** (k - 1)) for k in range(1, 51))
    first_above_2 = next(k for k in range(1, 51) if mus[k - 1] > 2)
    d = classify(A_K, 50)
    bounded = max(d.partial_products) <= 3
    verdicts = c.measure_verdict.value == "infinite" and d.measure_verdict.value == "finite"
    dt = time.perf_counter() - t0
    ok = sums_ok and mu_ok and first_above_2 <= 7 and bounded and verdicts and dt < 1
    report(
        2,
        ok,
        f"sqrt2 S_W=(W-1)/4, mu_k=q_k/2^(k-1) first > 2 at k={first_above_2}; "
        f"a_k=k max mu_k={float(max(d.partial_products)):.4f} <= 3 ({dt:.3f}s)",
    )


def test_criterion_3_eigen_relation():
    t0 = time.perf_counter()
    N = 10
    t = build_tower(SQRT2, N + 5)
    qN = t.height(N)
    exact = all(eigen_check(t, t.decode(N, ell), N).exact_increment for ell in range(qN - 1))
    bound = tail_bound(SQRT2, N).bound
    rng = np.random.default_rng(np.random.SeedSequence(2024))
    worst = Fraction(0)
    for _ in range(1000):
        code = random_code(t, N, rng, extra=5)
        dH = t.level_index(code, N + 5) - t.level_index(code, N)
        # certified upper bound on |f_{N+5} - f_N| = |exp(2 pi i alpha dH) - 1|
        worst = max(worst, chord_bounds(SQRT2, dH).hi)
    dt = time.perf_counter() - t0
    ok = exact and worst <= bound and dt < 10
    report(
        3,
        ok,
        f"{qN - 1} exact increments at N=10; max certified |f_15-f_10| = {float(worst):.3e} "
        f"<= tail_bound = {float(bound):.3e} on 1000 codes ({dt:.1f}s < 10s)",
    )


def test_criterion_4_partial_rigidity():
    t0 = time.perf_counter()
    ok = True
    mins = {}
    for name, cf in (("sqrt2", SQRT2), ("a_k=k", A_K)):
        t = build_tower(cf, 10)
        for k in range(3, 9):
            a_k = cf.coefficient(k)
            refs = levels_up_to(cf, min(k, 5))
            ratios = [return_ratio_push(t, ref, k) for ref in refs]
            m = min(ratios)
            ok &= m >= Fraction(a_k - 1, a_k)
            mins[(name, k)] = m
    # equality with (a_k-1)/a_k is attained at k <= 5, where the base of C_k is among the tested levels
    equal = all(mins[(n, k)] == Fraction(cf.coefficient(k) - 1, cf.coefficient(k)) for n, cf in (("sqrt2", SQRT2), ("a_k=k", A_K)) for k in (3, 4, 5))
    dt = time.perf_counter() - t0
    ok = ok and equal and dt < 30
    detail = "; ".join(
        f"{n}: " + ", ".join(f"k{k}={mins[(n, k)]}" for k in range(3, 9)) for n in ("sqrt2", "a_k=k")
    )
    report(4, ok, f"min ratio >= (a_k-1)/a_k over levels of C_j, j<=min(k,5) [{detail}] ({dt:.1f}s < 30s)")


def test_criterion_5_nonrigidity():
    t0 = time.perf_counter()
    M = SQRT2.certified_bound() + 1
    P = 169
    ratios, depth = escape_ratios(build_tower(SQRT2, 8), P)
    p_min = min(ratios, key=lambda p: (ratios[p], p))
    lo = ratios[p_min]
    dt = time.perf_counter() - t0
    ok = M == 3 and sorted(ratios) == list(range(2, P + 1)) and lo >= Fraction(1, 9) and dt < 60
    report(
        5,
        ok,
        f"sqrt2 M={M}: min over 1<p<=169 of mu(T^p I - I)/mu(I) = {lo} at p={p_min} "
        f"(>= 1/9; >= 1/4 as expected), exact at depth {depth} ({dt:.2f}s)",
    )


def test_criterion_6_rigidity_evidence():
    r = rigidity_scan(build_tower(A_K, 4), mode="rigid-search", k_range=range(2, 13))
    defs = [Fraction(row["deficiency"]) for row in r.per_k]
    ks = [row["k"] for row in r.per_k]
    ok = ks == list(range(2, 13)) and defs == [Fraction(1, k) for k in ks]
    ok &= all(x > y for x, y in zip(defs, defs[1:]))
    # the k <= 5 values are also checked by pushing level sets
    t = build_tower(A_K, 7)
    for k in range(2, 6):
        ok &= 1 - min(return_ratio_push(t, ref, k) for ref in (LevelRef(1, 0), LevelRef(k, 0))) == Fraction(1, k)
    report(6, ok, f"a_k=k deficiencies {', '.join(str(d) for d in defs)} = 1/a_k, strictly decreasing")


def test_criterion_7_eigenvalue_screens():
    verdicts = {n: eigenvalue_screen(SQRT2, FracMultiple(SQRT2, n)).verdict for n in range(-10, 11)}
    consistent = all(v == "consistent-with-eigenvalue" for v in verdicts.values())
    half = eigenvalue_screen(SQRT2, Fraction(1, 2))
    cert = half.certificate
    parity = cert.get("residue_cycle") == {"start": 1, "block": [1, 0]}
    ok = consistent and half.verdict == "excluded" and parity
    report(
        7,
        ok,
        f"frac(n sqrt2) consistent for all |n|<=10: {consistent}; beta=1/2 {half.verdict} "
        f"with q_k mod 2 cycle {cert.get('residue_cycle', {}).get('block')}",
    )


def test_criterion_8_type_iii_lambda():
    t0 = time.perf_counter()
    lam = Fraction(1, 2)
    ns = build_ns_tower(SQRT2, "III_lambda", 6, lam=lam)
    ratios = set()
    for N in range(1, 7):
        ratios |= set(ns.transition_ratios(N))
    clause_ratios = ratios <= {Fraction(1), lam, 1 / lam}
    clause_powers = all(lam ** round(math.log(r, float(lam))) == r for r in ratios)

    rng = np.random.default_rng(8)
    top = ns.height(6)
    clause_cocycle = True
    for _ in range(1000):
        H = int(rng.integers(0, top))
        n = int(rng.integers(0, top - H))
        m = int(rng.integers(0, top - H - n))
        e1 = rn_exponent(ns, ns.decode(6, H), n, 6).exponents[0]
        e2 = rn_exponent(ns, ns.decode(6, H + n), m, 6).exponents[0]
        both = rn_exponent(ns, ns.decode(6, H), n + m, 6)
        clause_cocycle &= isinstance(both.exponents[0], int) and both.exponents[0] == e1 + e2
        clause_cocycle &= both.ratio == lam ** both.exponents[0]

    stages = [k for k in range(1, 6) if SQRT2.coefficient(k) == 2]
    wits = [ratio_set_witness(ns, k, 1, depth=6) for k in stages]
    clause_witness = all(w.measure > 0 and w.target == lam for w in wits)

    ns1 = build_ns_tower(SQRT2, "III_1", 6, lam=lam, beta=Fraction(1, 3))
    w1 = iii_1_witnesses(ns1)
    clause_iii_1 = w1["lambda"].measure > 0 and w1["beta"].measure > 0
    dt = time.perf_counter() - t0

    shown = ", ".join(str(r) for r in sorted(ratios))
    clauses = {
        "single-step ratios in {1, 1/2, 2}": clause_ratios,
        "single-step ratios are integer powers of lambda": clause_powers,
        "cocycle on 1000 paths": clause_cocycle,
        f"exponent-1 witnesses at stages {stages}": clause_witness,
        "III_1 witnesses for lambda and beta": clause_iii_1,
    }
    failed = [c for c, v in clauses.items() if not v]
    ok = not failed and dt < 60
    report(
        8,
        ok,
        f"observed single-step ratios {{{shown}}}; "
        + ("all clauses hold" if not failed else "failing: " + "; ".join(failed))
        + f" ({dt:.1f}s)",
    )


def test_criterion_9_gauss_kuzmin():
    t0 = time.perf_counter()
    r = montecarlo(seed=7, samples=100_000, k_index=20)
    p1 = r.estimates[1]["empirical"]
    p11 = r.conditional["empirical"]
    dt = time.perf_counter() - t0
    ok = abs(p1 - 0.4150) <= 0.01 and abs(p11 - 0.3662) <= 0.02 and dt < 300
    report(
        9,
        ok,
        f"P(a_20=1)={p1:.4f} (|diff| {abs(p1 - 0.4150):.4f} <= 0.01), "
        f"P(1|1)={p11:.4f} (|diff| {abs(p11 - 0.3662):.4f} <= 0.02), dropped {r.dropped} ({dt:.1f}s)",
    )


def test_criterion_10_pushforward():
    t0 = time.perf_counter()
    N = default_depth(A_K)
    h = pushforward_histogram(build_tower(A_K, N), 100_000, N=N, bins=64, seed=10)
    N2 = default_depth(SQRT2)
    h2 = pushforward_histogram(build_tower(SQRT2, N2), 100_000, N=N2, bins=64, seed=10)
    dt = time.perf_counter() - t0
    ok = h.tail_bound < Fraction(1, 1000) and h.ks_statistic <= 0.02 and dt < 300
    report(
        10,
        ok,
        f"a_k=k at N={N} (tail {float(h.tail_bound):.2e}): KS={h.ks_statistic:.4f} <= 0.02; "
        f"sqrt2 at N={N2} KS={h2.ks_statistic:.4f} reported only ({dt:.1f}s)",
    )


def test_criterion_11_injectivity():
    t0 = time.perf_counter()
    N = 12
    t = build_tower(SQRT2, N + 2)
    rng = np.random.default_rng(np.random.SeedSequence(11))
    pairs = 0
    gaps = []
    while pairs < 1000:
        A = random_code(t, N, rng, extra=2)
        B = random_code(t, N, rng, extra=2)
        if A.normalized() == B.normalized():
            continue
        pairs += 1
        res = injectivity_screen(t, A, B, N, max_depth=N)
        gaps.append(res.gap_lower_bound if res.separated else None)
    dt = time.perf_counter() - t0
    ok = all(g is not None and g > 0 for g in gaps) and dt < 60
    positive = [g for g in gaps if g is not None]
    report(
        11,
        ok,
        f"{sum(g is not None for g in gaps)}/1000 distinct pairs separated at depth 12, "
        f"min certified gap {float(min(positive)):.3e} ({dt:.1f}s)",
    )
