"""Weighted towers: the type III_lambda, III_0 and III_1 variants of ``T_alpha``.

The combinatorics (heights, spacer counts, codes) are those of the plain
tower; only the widths of the pieces change.  At a weighted stage a level is
cut into ``ceil(a/2)`` wide pieces on the left and ``floor(a/2)`` narrow
pieces, ``lambda`` times as wide, on the right.  Spacers added at a stage
all get the width of the rightmost piece of the top level.

``T`` maps each level affinely onto the next, so its Radon-Nikodym
derivative on a level is the width ratio of the level above to the level.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
import sympy

from .cf import CFNumber
from .eigen import PhaseExponent
from .errors import (
    GoldenTypeRejected,
    InternalInvariantViolation,
    InvalidParameter,
    NeedsDeeperStage,
    WitnessNotFound,
)
from .intervals import Interval
from .tower import CONVENTIONS, PointCode, Tower, depth_cap

VARIANTS = ("III_lambda", "III_0", "III_1")


def _fs(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _valuations(r: Fraction) -> dict:
    out = {p: e for p, e in sympy.factorint(r.numerator).items()}
    for p, e in sympy.factorint(r.denominator).items():
        out[p] = out.get(p, 0) - e
    return out


def multiplicatively_independent(x: Fraction, y: Fraction) -> bool:
    """No relation ``x^i = y^j`` with ``(i, j) != (0, 0)``."""
    vx, vy = _valuations(Fraction(x)), _valuations(Fraction(y))
    primes = sorted(set(vx) | set(vy))
    rows = [(vx.get(p, 0), vy.get(p, 0)) for p in primes]
    return any(a * d - b * c != 0 for (a, b) in rows for (c, d) in rows)


def generator_exponents(r: Fraction, gens: Sequence[Fraction]) -> tuple:
    """Integers ``e`` with ``r = prod gens[i]^e[i]``; raises if none exist."""
    r = Fraction(r)
    if r == 1:
        return tuple(0 for _ in gens)
    if len(gens) == 1:
        g = gens[0]
        e, x = 0, r
        # repeated exact division by the generator
        step = g if x > 1 else 1 / g
        sign = -1 if x > 1 else 1
        for _ in range(4096):
            if x == 1:
                return (e,)
            x *= step
            e += sign
        raise InternalInvariantViolation(f"width ratio {r} is not a power of {g}")
    vr = _valuations(r)
    vg = [_valuations(g) for g in gens]
    primes = sorted(set(vr).union(*vg))
    A = sympy.Matrix([[v.get(p, 0) for v in vg] for p in primes])
    b = sympy.Matrix([vr.get(p, 0) for p in primes])
    try:
        sol, params = A.gauss_jordan_solve(b)
    except ValueError:
        raise InternalInvariantViolation(f"width ratio {r} is not a product of generator powers")
    if params.shape[0]:
        raise InternalInvariantViolation("generators are multiplicatively dependent")
    if any(not s.is_integer for s in sol):
        raise InternalInvariantViolation(f"width ratio {r} has non-integer generator exponents")
    return tuple(int(s) for s in sol)


def iii_lambda_fractions(a: int, g: Fraction) -> list[Fraction]:
    c, f = (a + 1) // 2, a // 2
    denom = c + g * f
    return [1 / denom] * c + [g / denom] * f


def iii_0_fractions(a: int) -> list[Fraction]:
    if a < 2:
        return [Fraction(1)]
    return [Fraction(1, 2)] + [Fraction(1, 2 * (a - 1))] * (a - 1)


@dataclass(frozen=True)
class RNExponent:
    n: int
    exponents: Optional[tuple]
    ratio: Fraction


@dataclass(frozen=True)
class RatioSetWitness:
    variant: str
    stage: int
    level: int
    n: int
    exponent: Union[int, tuple]
    target: Fraction
    measure: Fraction
    depth: int
    pieces: tuple

    def to_json(self, ns: "NSTower") -> dict:
        return {
            "variant": self.variant,
            "lambda": _fs(ns.lam) if ns.lam is not None else None,
            "beta": _fs(ns.beta) if ns.beta is not None else None,
            "stage": self.stage,
            "level": self.level,
            "n": self.n,
            "exponent": list(self.exponent) if isinstance(self.exponent, tuple) else self.exponent,
            "target": _fs(self.target),
            "measure": _fs(self.measure),
            "depth": self.depth,
            "pieces": list(self.pieces),
        }


class NSTower:
    """Weighted tower over the plain tower's combinatorics."""

    def __init__(self, cf: CFNumber, variant: str, depth: int, lam=None, beta=None, mu1=Fraction(1)):
        self.cf = cf
        self.variant = variant
        self.lam = None if lam is None else Fraction(lam)
        self.beta = None if beta is None else Fraction(beta)
        self.depth = depth
        self.mu1 = Fraction(mu1)
        self.tower = Tower(cf, depth, mu1)
        self.warnings: list[str] = []
        self.generator_of: dict = {}
        self.subsequence: list[int] = []
        self._frac: dict = {}
        self._build_fractions()
        self._build_spacers()

    # -- construction -------------------------------------------------------

    @property
    def generators(self) -> tuple:
        if self.variant == "III_lambda":
            return (self.lam,)
        if self.variant == "III_1":
            return (self.lam, self.beta)
        return ()

    def _build_fractions(self):
        cf = self.cf
        if self.variant == "III_lambda":
            for k in range(1, self.depth):
                self._frac[k] = iii_lambda_fractions(cf.coefficient(k), self.lam)
                if cf.coefficient(k) >= 2:
                    self.generator_of[k] = self.lam
        elif self.variant == "III_1":
            turn = 0
            for k in range(1, self.depth):
                a = cf.coefficient(k)
                if a >= 2:
                    g = self.lam if turn % 2 == 0 else self.beta
                    self.generator_of[k] = g
                    turn += 1
                    self._frac[k] = iii_lambda_fractions(a, g)
                else:
                    self._frac[k] = [Fraction(1)]
        else:
            j, k = 2, 0
            chosen = set()
            while True:
                k += 1
                if k >= self.depth:
                    break
                if cf.coefficient(k) >= j:
                    chosen.add(k)
                    self.subsequence.append(k)
                    j += 1
            for k in range(1, self.depth):
                a = cf.coefficient(k)
                self._frac[k] = iii_0_fractions(a) if k in chosen else [Fraction(1, a)] * a
        for k, fr in self._frac.items():
            if sum(fr) != 1:
                raise InternalInvariantViolation(f"stage {k} fractions do not sum to 1")

    def _build_spacers(self):
        q = self.tower._q
        # widths of the levels first appearing at stage k; stage 1 is C_1 itself
        self._spacer_width = {1: self.mu1}
        self._support_end = {1: self.mu1}
        for k in range(2, self.depth + 1):
            top = self.level_width(k - 1, q[k - 1] - 1)
            self._spacer_width[k] = top * self._frac[k - 1][-1]
            self._support_end[k] = self._support_end[k - 1] + q[k - 2] * self._spacer_width[k]

    # -- queries ------------------------------------------------------------

    def fractions(self, k: int) -> list[Fraction]:
        return list(self._frac[k])

    def height(self, k: int) -> int:
        return self.tower.height(k)

    def decode(self, N: int, ell: int) -> PointCode:
        return self.tower.decode(N, ell)

    def level_index(self, code: PointCode, N: int) -> int:
        return self.tower.level_index(code, N)

    def level_width(self, N: int, ell: int) -> Fraction:
        code = self.tower.decode(N, ell)
        w = self._spacer_width[code.k_x]
        for j, m in enumerate(code.digits):
            w *= self._frac[code.k_x + j][m]
        return w

    def level_widths(self, N: int) -> list[Fraction]:
        return [self.level_width(N, ell) for ell in range(self.height(N))]

    def level_interval(self, N: int, ell: int) -> Interval:
        code = self.tower.decode(N, ell)
        k = code.k_x
        if k == 1:
            left, w = Fraction(0), self.mu1
        else:
            a, q = self.tower._a[k - 1], self.tower._q[k - 1]
            w = self._spacer_width[k]
            left = self._support_end[k - 1] + (code.ell - a * q) * w
        for j, m in enumerate(code.digits):
            fr = self._frac[k + j]
            left += w * sum(fr[:m])
            w *= fr[m]
        return Interval(left, left + w)

    def measure(self, N: int) -> Fraction:
        return self._support_end[N]

    def transition_ratios(self, N: int) -> list[Fraction]:
        """``width(ell + 1) / width(ell)`` for every non-top level of ``C_N``."""
        w = self.level_widths(N)
        return [w[i + 1] / w[i] for i in range(len(w) - 1)]

    def exponents_of(self, r: Fraction) -> Optional[tuple]:
        if not self.generators:
            return None
        return generator_exponents(r, self.generators)

    def dump(self) -> dict:
        return {
            "alpha": self.cf.label,
            "variant": self.variant,
            "lambda": _fs(self.lam) if self.lam is not None else None,
            "beta": _fs(self.beta) if self.beta is not None else None,
            "conventions": dict(
                CONVENTIONS,
                piece_order="wide pieces left, narrow pieces right",
                spacer_width="rightmost piece of the top level",
                iii_1_alternation="first stage with a_k >= 2 uses lambda",
                iii_0_subsequence="k_j smallest index after k_{j-1} with a_k >= j, j = 2, 3, ...",
                iii_0_cuts="first piece half the level, the rest equal",
            ),
            "subsequence": self.subsequence,
            "warnings": self.warnings,
            "stages": [
                {
                    "k": k,
                    "q_k": self.height(k),
                    "fractions": [_fs(f) for f in self._frac[k]] if k in self._frac else None,
                    "generator": _fs(self.generator_of[k]) if k in self.generator_of else None,
                    "spacer_width": _fs(self._spacer_width[k]),
                    "measure": _fs(self._support_end[k]),
                }
                for k in range(1, self.depth + 1)
            ],
        }


def build_ns_tower(cf: CFNumber, variant: str, N: int, lam=None, beta=None) -> NSTower:
    if variant not in VARIANTS:
        raise InvalidParameter(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")
    if cf.golden_type():
        raise GoldenTypeRejected(f"{cf.label} is of golden type")
    if N > depth_cap():
        raise InvalidParameter(f"depth {N} exceeds RANKONE_DEPTH_CAP={depth_cap()}")
    for name, v in (("lambda", lam), ("beta", beta)):
        if v is not None:
            v = Fraction(v)
            if not 0 < v < 1:
                raise InvalidParameter(f"{name} must lie in (0, 1); got {v}")
    if variant in ("III_lambda", "III_1") and lam is None:
        raise InvalidParameter(f"{variant} needs lambda")
    if variant == "III_1" and beta is None:
        raise InvalidParameter("III_1 needs beta")
    if variant == "III_0" and not cf.certified_unbounded():
        raise InvalidParameter("III_0 needs a tail rule with unbounded coefficients")
    ns = NSTower(cf, variant, N, lam, beta)
    if variant == "III_1" and not multiplicatively_independent(ns.lam, ns.beta):
        msg = f"lambda = {ns.lam} and beta = {ns.beta} are multiplicatively dependent"
        ns.warnings.append(msg)
        warnings.warn(msg, stacklevel=2)
    return ns


def rn_exponent(ns: NSTower, code: PointCode, n: int, depth: int) -> RNExponent:
    """``omega_n`` on the level nest of ``code``, by summing single-step exponents."""
    H = ns.level_index(code, depth)
    if not 0 <= H + n < ns.height(depth):
        raise NeedsDeeperStage(depth + 1)
    lo, hi = (H, H + n) if n >= 0 else (H + n, H)
    widths = [ns.level_width(depth, ell) for ell in range(lo, hi + 1)]
    ratio = Fraction(1)
    total = None
    for i in range(len(widths) - 1):
        r = widths[i + 1] / widths[i]
        ratio *= r
        e = ns.exponents_of(r)
        if e is not None:
            total = e if total is None else tuple(x + y for x, y in zip(total, e))
    if n < 0:
        ratio = 1 / ratio
        total = None if total is None else tuple(-x for x in total)
    if total is None and ns.generators:
        total = tuple(0 for _ in ns.generators)
    if total is not None and ns.exponents_of(ratio) != total:
        raise InternalInvariantViolation("single-step exponents do not add up to the direct ratio")
    return RNExponent(n, total, ratio)


def ratio_set_witness(
    ns: NSTower,
    k: int,
    target_exponent=1,
    depth: Optional[int] = None,
    ell: int = 0,
    max_extra: int = 2,
) -> RatioSetWitness:
    """Smallest ``n > 0`` with ``mu(A cap T^-n A cap {omega_n = t}) > 0``.

    ``A`` is level ``ell`` of ``C_k``; the witness set is computed exactly as
    a union of levels of ``C_D`` for ``D = k+1, ...`` (the shallowest depth
    giving a witness wins).  Only points whose ``n``-step orbit stays in
    ``C_D`` are counted, so the reported measure is that of an explicit
    subset on which ``omega_n = t`` holds exactly.
    """
    gens = ns.generators
    if not gens:
        raise InvalidParameter("ratio-set witnesses need a III_lambda or III_1 tower")
    e = (target_exponent,) if isinstance(target_exponent, int) else tuple(target_exponent)
    if len(e) != len(gens):
        raise InvalidParameter(f"target needs {len(gens)} exponent(s)")
    target = Fraction(1)
    for g, x in zip(gens, e):
        target *= g**x
    if ns.cf.coefficient(k) < 2:
        raise WitnessNotFound(f"a_{k} = 1: stage {k} has no cuts to compare")
    last = min(ns.depth, (depth or k + 1 + max_extra))
    tw = ns.tower
    for D in range(k + 1, last + 1):
        A = tw.refine(tw.level_set(k, [ell]), D).indices
        top = ns.height(D)
        member = np.zeros(top, dtype=bool)
        member[A] = True
        widths = ns.level_widths(D)
        for n in range(1, top):
            meas = Fraction(0)
            pieces = []
            for r in A:
                r = int(r)
                s = r + n
                if s < top and member[s] and widths[s] / widths[r] == target:
                    meas += widths[r]
                    pieces.append(r)
            if meas > 0:
                return RatioSetWitness(
                    ns.variant,
                    k,
                    ell,
                    n,
                    e[0] if len(e) == 1 else e,
                    target,
                    meas,
                    D,
                    tuple(pieces),
                )
    raise WitnessNotFound(f"no witness for exponent {e} from stage {k} within depth {last}")


def iii_1_witnesses(ns: NSTower) -> dict:
    """One witness for each generator, at the first stage cut with it."""
    if ns.variant != "III_1":
        raise InvalidParameter("needs a III_1 tower")
    out = {}
    for name, g, e in (("lambda", ns.lam, (1, 0)), ("beta", ns.beta, (0, 1))):
        stages = [k for k, h in ns.generator_of.items() if h == g and k + 1 <= ns.depth]
        if not stages:
            raise WitnessNotFound(f"no stage cut with {name} within depth {ns.depth}")
        out[name] = ratio_set_witness(ns, min(stages), e)
    return out


def eigen_phase_ns(ns: NSTower, code: PointCode, N: int) -> PhaseExponent:
    return PhaseExponent(ns.level_index(code, N), N, code)
