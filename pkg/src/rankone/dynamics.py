"""Exact checks of the dynamical properties of ``T_alpha``.

Return ratios are computed on unions of levels, so every number reported
here is an exact rational.  Two independent routes exist for
``mu(T^{q_k} I cap I) / mu(I)``: pushing the refined level set
(:meth:`Tower.push_level`) and a closed form over digit differences that
works at stages far too deep to enumerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .cf import CFNumber, address, as_real, height_residue_cycle, zeta_interval
from .errors import DepthCapExceeded, InvalidInput, InvalidMode, NeedsDeeperStage
from .tower import Tower, depth_cap

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_INCONCLUSIVE = 3


def _fs(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# -- heights and eigenvalues -------------------------------------------------


def coprime_heights(cf: CFNumber, N: int) -> bool:
    return all(math.gcd(cf.q(k), cf.q(k + 1)) == 1 for k in range(0, N + 1))


@dataclass
class EigenScreenReport:
    beta: str
    verdict: str  # consistent-with-eigenvalue | excluded | inconclusive
    eps_upper: list
    n: Optional[int] = None
    certificate: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_INCONCLUSIVE if self.verdict == "inconclusive" else EXIT_OK

    def to_json(self) -> dict:
        return {
            "beta": self.beta,
            "verdict": self.verdict,
            "n": self.n,
            "eps_upper": [_fs(e) for e in self.eps_upper],
            "certificate": self.certificate,
        }


def rational_eigenvalue_screen(cf: CFNumber, q: int, N: int = 30) -> dict:
    """Can ``exp(2 pi i a/q)`` with gcd(a, q) = 1 be an eigenvalue?

    It would force ``q | q_k`` for all large k.  Consecutive heights are
    coprime, so q >= 2 never divides two of them in a row: the exclusion is
    unconditional.  The scan and, when a tail rule makes it periodic, the
    residue cycle of ``q_k mod q`` are reported as the explicit pattern.
    """
    if q < 1:
        raise InvalidInput("q must be >= 1")
    if q == 1:
        return {"q": 1, "verdict": "not-a-constraint", "note": "lambda = 1 is always an eigenvalue"}
    residues = [cf.q(k) % q for k in range(1, N + 1)]
    nondividing = [k for k, r in zip(range(1, N + 1), residues) if r]
    cycle = height_residue_cycle(cf, q)
    cert = {
        "q": q,
        "residues": residues,
        "nondividing_k": nondividing,
        "lower_bound": _fs(Fraction(1, q)),
        "reason": "gcd(q_k, q_{k+1}) = 1, so q does not divide q_k for infinitely many k",
    }
    if cycle is not None:
        k0, block = cycle
        cert["residue_cycle"] = {"start": k0, "block": block}
    cert["verdict"] = "excluded" if coprime_heights(cf, N) else "inconclusive"
    return cert


def eigenvalue_screen(cf: CFNumber, beta, K: int = 30, precision=Fraction(1, 10**30)) -> EigenScreenReport:
    """Screen ``exp(2 pi i beta)`` as an eigenvalue via the address of beta."""
    real = as_real(beta)
    label = str(real)
    addr = address(cf, real, K, precision)
    eps = addr.eps_upper
    exact = getattr(real, "exact", None)
    if exact is not None:
        b = Fraction(exact).denominator
        if b == 1:
            return EigenScreenReport(label, "consistent-with-eigenvalue", eps, 0, {"reason": "beta is an integer"})
        cert = rational_eigenvalue_screen(cf, b, K)
        hits = [e.k for e in addr.entries if e.eps.lo >= Fraction(1, b)]
        cert["eps_at_least_lower_bound_k"] = hits
        if cert["verdict"] == "excluded" and hits:
            return EigenScreenReport(label, "excluded", eps, None, cert)
        return EigenScreenReport(label, "inconclusive", eps, None, cert)

    M = cf.certified_bound()
    M = None if M is None else M + 1  # strict bound
    tol = Fraction(1, 4 * M) if M else None
    tail = addr.entries[2 * K // 3 :]
    # p_{k,beta} = n p_k - m q_k  =>  n = p_{k,beta} / p_k (mod q_k)
    candidates = []
    for e in tail:
        pk, qk = cf.pq(e.k)
        if qk < 3:
            continue
        n = e.p * pow(pk, -1, qk) % qk
        if n > qk // 2:
            n -= qk
        candidates.append(n)
    cert = {"tolerance": _fs(tol) if tol else None, "strict_bound_M": M}
    if candidates and len(set(candidates)) == 1:
        n = candidates[0]
        # forward check: when p_{k,beta} = n p_k - m q_k, eps_{k,beta} is exactly |n| zeta_k
        ok = all(e.eps.overlaps(zeta_interval(cf, e.k, precision) * abs(n)) for e in tail)
        small = tol is None or all(e.eps.hi < tol for e in tail)
        cert["n_matched"] = n
        cert["forward_check"] = ok
        if ok and small:
            return EigenScreenReport(label, "consistent-with-eigenvalue", eps, n, cert)
    return EigenScreenReport(label, "inconclusive", eps, None, cert)


# -- return ratios -----------------------------------------------------------


@dataclass(frozen=True)
class LevelRef:
    stage: int
    ell: int

    def __str__(self):
        return f"C{self.stage}[{self.ell}]"


def default_levels(tower: Tower, k: int) -> list[LevelRef]:
    """All levels of ``C_min(k, 6)`` plus the base of ``C_1``."""
    j = min(k, 6)
    refs = [LevelRef(j, ell) for ell in range(tower.cf.q(j))]
    if j != 1:
        refs.insert(0, LevelRef(1, 0))
    return refs


def levels_up_to(cf: CFNumber, jmax: int) -> list[LevelRef]:
    return [LevelRef(j, ell) for j in range(1, jmax + 1) for ell in range(cf.q(j))]


def _push_resolving(tower: Tower, ref: LevelRef, p: int, min_depth: int, cap: int):
    depth = max(min_depth, ref.stage)
    while True:
        t = tower.extended(depth)
        L = t.refine(t.level_set(ref.stage, [ref.ell]), depth)
        try:
            return t, L, t.push_level(L, p)
        except NeedsDeeperStage:
            depth += 1
            if depth > cap:
                raise DepthCapExceeded(f"T^{p} on {ref} does not resolve by depth {cap}")


def return_ratio_push(tower: Tower, ref: LevelRef, k: int, cap: Optional[int] = None) -> Fraction:
    """``mu(T^{q_k} I cap I)/mu(I)`` by pushing the refined level set."""
    cap = cap or depth_cap()
    _, L, img = _push_resolving(tower, ref, tower.cf.q(k), k + 1, cap)
    return Fraction((L & img).count, L.count)


def _shift_pairs(cf: CFNumber, j: int, k: int, target: int) -> int:
    """#{(r, r') in R x R : r - r' = target}, R = {sum_{i=j}^{k-1} m_i q_i}."""
    qs = [cf.q(i) for i in range(j, k)]
    aa = [cf.coefficient(i) for i in range(j, k)]
    # reach[i] bounds |sum_{t<i} d_t q_t|
    reach = [0]
    for a, q in zip(aa, qs):
        reach.append(reach[-1] + (a - 1) * q)

    @lru_cache(maxsize=None)
    def count(i: int, rest: int) -> int:
        if i == 0:
            return 1 if rest == 0 else 0
        a, q = aa[i - 1], qs[i - 1]
        total = 0
        for d in range(-(a - 1), a):
            r = rest - d * q
            if abs(r) <= reach[i - 1]:
                total += (a - abs(d)) * count(i - 1, r)
        return total

    return count(len(qs), target)


def return_ratio_structural(cf: CFNumber, ref: LevelRef, k: int) -> Fraction:
    """Closed form of the return ratio of a level of ``C_j``, ``j <= k``.

    Inside ``C_{k+1}`` the first ``a_k - 1`` copies of ``I`` are carried
    onto the next copy by ``T^{q_k}``.  The copy in the last sub-column sits
    under the ``q_{k-1}`` spacers and lands ``q_{k-1}`` levels above the
    bottom of the column in the next stage; a fraction ``(a_{k+1}-1)/a_{k+1}``
    of it stays in ``C_{k+1}`` and meets ``I`` exactly where a level of
    ``I`` lies ``q_{k-1}`` above another one.
    """
    if ref.stage > k:
        raise InvalidInput("the level must belong to a column at or below stage k")
    a_k, a_k1 = cf.coefficient(k), cf.coefficient(k + 1)
    R = 1
    for i in range(ref.stage, k):
        R *= cf.coefficient(i)
    pairs = _shift_pairs(cf, ref.stage, k, cf.q(k - 1))
    return Fraction(a_k - 1, a_k) + Fraction(a_k1 - 1, a_k * a_k1) * Fraction(pairs, R)


@dataclass
class RigidityReport:
    alpha: str
    mode: str
    per_k: list
    verdict: str  # rigid-along-subsequence | nonrigid-certified | partially-rigid | inconclusive | violation
    certificate: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.verdict == "violation":
            return EXIT_VIOLATION
        if self.verdict == "inconclusive":
            return EXIT_INCONCLUSIVE
        return EXIT_OK

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "mode": self.mode,
            "verdict": self.verdict,
            "per_k": self.per_k,
            "certificate": self.certificate,
        }


def partial_rigidity_scan(
    tower: Tower,
    k_range: Iterable[int],
    level_sample: Optional[Sequence[LevelRef]] = None,
    method: str = "push",
) -> RigidityReport:
    """Exact minimum return ratio along ``T^{q_k}`` over sampled levels.

    ``level_sample`` defaults per k to :func:`default_levels`.  Levels above
    stage k are dropped.  Stages with ``a_k = 1`` are skipped.
    """
    if method not in ("push", "structural"):
        raise InvalidInput(f"unknown method {method!r}")
    cf = tower.cf
    per_k = []
    violated = False
    for k in k_range:
        a_k = cf.coefficient(k)
        if a_k == 1:
            per_k.append({"k": k, "a_k": 1, "skipped": True})
            continue
        refs = [r for r in (level_sample if level_sample is not None else default_levels(tower, k)) if r.stage <= k]
        best = None
        for ref in refs:
            if method == "push":
                r = return_ratio_push(tower, ref, k)
            else:
                r = return_ratio_structural(cf, ref, k)
            if best is None or r < best[0]:
                best = (r, ref)
        bound = Fraction(a_k - 1, a_k)
        ok = best[0] >= bound
        violated |= not ok
        per_k.append(
            {
                "k": k,
                "a_k": a_k,
                "q_k": cf.q(k),
                "ratio": _fs(best[0]),
                "argmin": str(best[1]),
                "bound": _fs(bound),
                "levels_tested": len(refs),
                "holds": ok,
            }
        )
    tested = [Fraction(r["ratio"]) for r in per_k if not r.get("skipped")]
    verdict = "violation" if violated else ("partially-rigid" if tested else "inconclusive")
    cert = {"min_ratio": _fs(min(tested)) if tested else None, "constant": "1/2"}
    if tested and min(tested) < Fraction(1, 2):
        verdict = "violation"
    return RigidityReport(cf.label, "partial", per_k, verdict, cert)


def escape_ratios(tower: Tower, P: int, ref: LevelRef = LevelRef(1, 0)) -> tuple[dict, int]:
    """``mu(T^p I cap I^c)/mu(I)`` for ``1 < p <= P``, all at one exact depth."""
    cap = depth_cap()
    t, L, _ = _push_resolving(tower, ref, P, ref.stage + 1, cap)
    depth = L.stage
    idx = L.indices
    top = t.height(depth)
    if idx.max() + P >= top:
        raise NeedsDeeperStage(depth + 1)
    members = np.zeros(top, dtype=bool)
    members[idx] = True
    n = idx.size
    out = {}
    for p in range(2, P + 1):
        inside = int(members[idx + p].sum())
        out[p] = Fraction(n - inside, n)
    return out, depth


def rigidity_scan(
    tower: Tower,
    cf: Optional[CFNumber] = None,
    mode: str = "rigid-search",
    k_range: Optional[Iterable[int]] = None,
    P: Optional[int] = None,
    level_sample: Optional[Sequence[LevelRef]] = None,
) -> RigidityReport:
    cf = cf or tower.cf
    if mode == "rigid-search":
        if cf.certified_bound() is not None:
            raise InvalidMode("rigid-search needs unbounded coefficients; the tail rule bounds them")
        k_range = list(k_range) if k_range is not None else list(range(2, 13))
        per_k = []
        for k in k_range:
            a_k = cf.coefficient(k)
            if a_k == 1:
                continue
            refs = level_sample or [LevelRef(1, 0), LevelRef(k, 0)]
            ratios = [return_ratio_structural(cf, r, k) for r in refs if r.stage <= k]
            worst = min(ratios)
            per_k.append(
                {
                    "k": k,
                    "a_k": a_k,
                    "ratio": _fs(worst),
                    "deficiency": _fs(1 - worst),
                    "symmetric_difference": _fs(2 * (1 - worst)),
                    "one_over_a_k": _fs(Fraction(1, a_k)),
                }
            )
        defs = [Fraction(r["deficiency"]) for r in per_k]
        vanishing = all(d <= Fraction(1, r["a_k"]) for d, r in zip(defs, per_k)) and all(
            x >= y for x, y in zip(defs, defs[1:])
        )
        verdict = "rigid-along-subsequence" if per_k and vanishing else "inconclusive"
        cert = {
            "subsequence": [r["k"] for r in per_k],
            "note": "finite evidence: deficiencies bounded by 1/a_k along an unbounded subsequence",
        }
        return RigidityReport(cf.label, mode, per_k, verdict, cert)

    if mode == "nonrigid-certify":
        bound = cf.certified_bound()
        if bound is None:
            raise InvalidMode("nonrigid-certify needs a certified coefficient bound")
        M = bound + 1
        if P is None:
            P = cf.q(6)
        ratios, depth = escape_ratios(tower, P)
        p_min = min(ratios, key=lambda p: (ratios[p], p))
        lower = Fraction(1, M * M)
        at_heights = {}
        k = 1
        while cf.q(k) <= P:
            if cf.q(k) > 1:
                at_heights[str(k)] = {
                    "p": cf.q(k),
                    "ratio": _fs(ratios[cf.q(k)]),
                    "scale": _fs(Fraction(1, cf.coefficient(k) * cf.coefficient(k - 1))) if k > 1 else None,
                }
            k += 1
        holds = ratios[p_min] >= lower
        cert = {
            "M": M,
            "P": P,
            "range": [2, P],
            "depth": depth,
            "lower_bound": _fs(lower),
            "min_ratio": _fs(ratios[p_min]),
            "argmin_p": p_min,
            "at_heights": at_heights,
        }
        per_p = [{"p": p, "ratio": _fs(r)} for p, r in sorted(ratios.items())]
        verdict = "nonrigid-certified" if holds else "violation"
        return RigidityReport(cf.label, mode, per_p, verdict, cert)

    raise InvalidMode(f"unknown mode {mode!r}; expected rigid-search or nonrigid-certify")
