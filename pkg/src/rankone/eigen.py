"""The eigenfunction ``f_alpha`` in integer phase-exponent form.

At depth N a point x sits on level ``H_N(x)`` of ``C_N`` and
``f_N(x) = exp(2 pi i alpha H_N(x))``.  Everything exact is phrased in terms
of the integer ``H``; phases only become intervals (never floats) when a
distance on the circle is needed.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import stats

from .cf import CFNumber, FracMultiple
from .errors import DepthUnavailable, InsufficientPrecision, InvalidInput, NeedsDeeperStage, SamePoint
from .intervals import PI_UPPER, Interval, chord_lower, chord_upper
from .tower import PointCode, Tower, depth_cap

# explicit terms before the geometric closure in tail_bound
TAIL_TERMS = 8


@dataclass(frozen=True)
class PhaseExponent:
    H: int
    N: int
    code: PointCode


@dataclass(frozen=True)
class TailBound:
    N: int
    bound: Fraction

    def __float__(self):
        return float(self.bound)


@dataclass(frozen=True)
class CircleSample:
    H: int
    N: int
    angle: Interval
    error_radius: Fraction


@dataclass(frozen=True)
class EigenCheck:
    exact_increment: bool
    residual_bound: Fraction
    H: int
    H_image: int


@dataclass(frozen=True)
class InjectivityResult:
    separated: bool
    gap_lower_bound: Fraction
    depth: int
    H_A: int
    H_B: int


def phase_exponent(tower: Tower, code: PointCode, N: int) -> PhaseExponent:
    if N > tower.depth:
        raise DepthUnavailable(f"depth {N} beyond the built tower (depth {tower.depth})")
    return PhaseExponent(tower.level_index(code, N), N, code)


def tail_bound(cf: CFNumber, N: int) -> TailBound:
    """Rational upper bound on ``sum_{k >= N} ||f_{k+1} - f_k||``.

    Each term is below ``2 pi eps_k a_k q_k < 2 pi / q_k``.  The first
    TAIL_TERMS terms are summed exactly, the rest are closed off with
    ``q_{k+2} >= 2 q_k``: even and odd offsets each sum to at most ``2/q_M``.
    """
    if N < 1:
        raise InvalidInput("N must be >= 1")
    M = N + TAIL_TERMS
    s = sum(Fraction(1, cf.q(k)) for k in range(N, M))
    s += Fraction(2, cf.q(M)) + Fraction(2, cf.q(M + 1))
    return TailBound(N, 2 * PI_UPPER * s)


def default_depth(cf: CFNumber, threshold=Fraction(1, 1000)) -> int:
    """Smallest N with ``tail_bound(N) < threshold``."""
    threshold = Fraction(threshold)
    for N in range(1, depth_cap() + 1):
        if tail_bound(cf, N).bound < threshold:
            return N
    raise DepthUnavailable(f"tail bound stays above {threshold} up to the depth cap")


def eigen_check(tower: Tower, code: PointCode, N: int) -> EigenCheck:
    H = tower.level_index(code, N)
    image = tower.apply_T(code, N)  # NeedsDeeperStage on the top level
    H1 = tower.level_index(image, N)
    return EigenCheck(H1 == H + 1, 2 * tail_bound(tower.cf, N).bound, H, H1)


def circle_value(tower: Tower, code: PointCode, N: int, precision=Fraction(1, 10**12)) -> CircleSample:
    H = phase_exponent(tower, code, N).H
    angle = phase_angle(tower.cf, H, precision)
    return CircleSample(H, N, angle, tail_bound(tower.cf, N).bound)


def phase_angle(cf: CFNumber, H: int, precision=Fraction(1, 10**12)) -> Interval:
    """``frac(alpha H)`` enclosed in an interval of width at most ``precision``."""
    precision = Fraction(precision)
    if precision <= 0:
        raise InsufficientPrecision("precision must be positive")
    return FracMultiple(cf, H).enclose(precision)


def circle_distance(cf: CFNumber, H: int, precision=Fraction(1, 10**20)) -> Interval:
    """Enclosure of ``dist(alpha H, Z)``."""
    if H == 0:
        return Interval.point(0)
    return (cf.enclose(Fraction(precision) / abs(H)) * H).dist_to_int()


def chord_bounds(cf: CFNumber, H: int, precision=Fraction(1, 10**20)) -> Interval:
    """Certified enclosure of ``|exp(2 pi i alpha H) - 1|``."""
    d = circle_distance(cf, H, precision)
    return Interval(chord_lower(d.lo), max(chord_lower(d.lo), chord_upper(d.hi)))


def injectivity_screen(
    tower: Tower, codeA: PointCode, codeB: PointCode, N: int, max_depth: Optional[int] = None
) -> InjectivityResult:
    """Certified lower bound on ``|f(A) - f(B)|``.

    Starts at depth N and deepens one stage at a time up to ``max_depth``
    while the bound is not positive.  A non-separated result is inconclusive.
    """
    if codeA.normalized() == codeB.normalized():
        raise SamePoint("the two codes describe the same point")
    if max_depth is None:
        max_depth = min(N + 8, depth_cap())
    max_depth = max(max_depth, N)
    t = tower.extended(max_depth) if max_depth > tower.depth else tower
    best = None
    for depth in range(N, max_depth + 1):
        if depth < max(codeA.k_x, codeB.k_x):
            continue
        HA, HB = t.level_index(codeA, depth), t.level_index(codeB, depth)
        gap = chord_bounds(t.cf, HA - HB).lo - 2 * tail_bound(t.cf, depth).bound
        best = InjectivityResult(gap > 0, gap, depth, HA, HB)
        if best.separated:
            return best
    if best is None:
        raise NeedsDeeperStage(max(codeA.k_x, codeB.k_x))
    return best


# -- sampling -------------------------------------------------------------


def uniform_ints(rng: np.random.Generator, n: int, size: int) -> list[int]:
    """``size`` uniform integers in ``[0, n)``; exact for any big n."""
    if n < (1 << 62):
        return [int(v) for v in rng.integers(0, n, size=size)]
    bits = n.bit_length()
    nbytes = (bits + 7) // 8
    out = []
    while len(out) < size:
        v = int.from_bytes(rng.bytes(nbytes), "little") >> (8 * nbytes - bits)
        if v < n:
            out.append(v)
    return out


def random_code(tower: Tower, N: int, rng: np.random.Generator, extra: int = 0) -> PointCode:
    """A point drawn from m restricted to ``C_N``, with ``extra`` further random digits.

    All levels of ``C_N`` have the same width, so a uniform level index is a
    uniform point; each deeper digit is uniform in ``[0, a_i)``.
    """
    ell = uniform_ints(rng, tower.height(N), 1)[0]
    code = tower.decode(N, ell)
    more = tuple(int(rng.integers(0, tower.cf.coefficient(i))) for i in range(N, N + extra))
    return PointCode(code.k_x, code.ell, code.digits + more)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    mass: np.ndarray
    ks_statistic: float
    ks_pvalue: float
    N: int
    tail_bound: Fraction
    angle_error: Fraction
    samples: int
    seed: int
    measure: Fraction

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_start", "bin_end", "mass"])
        for lo, hi, m in zip(self.edges[:-1], self.edges[1:], self.mass):
            w.writerow([f"{lo:.10g}", f"{hi:.10g}", f"{m:.10g}"])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "samples": self.samples,
            "seed": self.seed,
            "bins": len(self.mass),
            "ks_statistic": self.ks_statistic,
            "ks_pvalue": self.ks_pvalue,
            "tail_bound": f"{self.tail_bound.numerator}/{self.tail_bound.denominator}",
            "tail_bound_float": float(self.tail_bound),
            "angle_error": float(self.angle_error),
            "measure_C_N": f"{self.measure.numerator}/{self.measure.denominator}",
            "mass": [float(m) for m in self.mass],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def pushforward_angles(tower: Tower, N: int, sample_count: int, seed: int) -> tuple[np.ndarray, Fraction]:
    """Angles ``frac(alpha H_N(x))`` of points drawn from m on ``C_N``.

    One rational approximation ``p_M/q_M`` with ``q_N/(q_M q_{M+1}) < 2^-60``
    serves every sample, so each angle is ``(H p_M mod q_M)/q_M`` up to that
    error (returned alongside).
    """
    cf = tower.cf
    qN = tower.height(N)
    M = cf.enclosure_index(Fraction(1, qN << 60))
    pM, qM = cf.pq(M)
    err = Fraction(qN, qM * cf.q(M + 1))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    Hs = uniform_ints(rng, qN, sample_count)
    angles = np.array([(H * pM % qM) / qM for H in Hs], dtype=float)
    return angles, err


def pushforward_histogram(
    tower: Tower, sample_count: int, N: Optional[int] = None, bins: int = 64, seed: int = 0
) -> Histogram:
    if bins < 2:
        raise InvalidInput("bins must be >= 2")
    if sample_count < 1:
        raise InvalidInput("sample_count must be >= 1")
    if N is None:
        N = default_depth(tower.cf)
    tower = tower.extended(N)
    angles, err = pushforward_angles(tower, N, sample_count, seed)
    counts, edges = np.histogram(angles, bins=bins, range=(0.0, 1.0))
    ks = stats.kstest(angles, "uniform")
    return Histogram(
        edges=edges,
        mass=counts / sample_count,
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        N=N,
        tail_bound=tail_bound(tower.cf, N).bound,
        angle_error=err,
        samples=sample_count,
        seed=seed,
        measure=tower.measure(N),
    )
