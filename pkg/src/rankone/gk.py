"""Gauss-Kuzmin limits and an exact Monte Carlo check of them.

Random alphas are uniform dyadic cells of width ``2^-bits``.  A coefficient
is counted only when every number in the cell shares it, so no
floating-point rounding ever enters the statistics.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from .cf import dyadic_cf
from .errors import InvalidInput

CHUNK = 10_000
LIMIT_1 = 0.4150  # as quoted, 4 decimals
LIMIT_1_GIVEN_1 = 0.3662


def gk_limit(n: int, digits: Optional[int] = None):
    """``log2(1 + 1/(n(n+2)))``; an ``mpmath.mpf`` when ``digits`` is given."""
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if digits is None:
        return math.log2(1 + 1 / (n * (n + 2)))
    with mpmath.workdps(digits):
        return +mpmath.log(1 + mpmath.mpf(1) / (n * (n + 2)), 2)


def gk_conditional(n1: int, n2: int, digits: Optional[int] = None):
    """Limit of ``P(a_k = n2 | a_{k-1} = n1)``."""
    if n1 < 1 or n2 < 1:
        raise InvalidInput("n1 and n2 must be >= 1")
    num = 1 + Fraction(1, ((n2 + 1) * n1 + 1) * ((n1 + 1) * n2 + 1))
    den = 1 + Fraction(1, n1 * (n1 + 2))
    if digits is None:
        return math.log(num) / math.log(den)
    with mpmath.workdps(digits):
        return mpmath.log(mpmath.mpf(num.numerator) / num.denominator) / mpmath.log(
            mpmath.mpf(den.numerator) / den.denominator
        )


def gk_partial_sum(N: int) -> float:
    """``sum_{n<=N} pmf(n)``; the product telescopes to ``log2(2(N+1)/(N+2))``."""
    return math.log2(2 * (N + 1) / (N + 2))


@dataclass
class _Tally:
    samples: int = 0
    dropped: int = 0
    counts: dict = field(default_factory=dict)
    prev_one: int = 0
    both_one: int = 0
    scanned: int = 0
    scan_dropped: int = 0
    divergent: int = 0

    def merge(self, other: "_Tally"):
        self.samples += other.samples
        self.dropped += other.dropped
        for n, c in other.counts.items():
            self.counts[n] = self.counts.get(n, 0) + c
        self.prev_one += other.prev_one
        self.both_one += other.both_one
        self.scanned += other.scanned
        self.scan_dropped += other.scan_dropped
        self.divergent += other.divergent


def _run_chunk(args) -> _Tally:
    seed_seq, size, k, bits, window, threshold = args
    rng = np.random.default_rng(seed_seq)
    t = _Tally()
    nbytes = (bits + 7) // 8
    for _ in range(size):
        m = int.from_bytes(rng.bytes(nbytes), "little") >> (8 * nbytes - bits)
        coeffs = dyadic_cf(m, bits, max(k, window or 0))
        t.samples += 1
        if len(coeffs) < k:
            t.dropped += 1
        else:
            a = coeffs[k - 1]
            t.counts[a] = t.counts.get(a, 0) + 1
            if k >= 2 and coeffs[k - 2] == 1:
                t.prev_one += 1
                t.both_one += a == 1
        if window:
            t.scanned += 1
            if len(coeffs) < window:
                t.scan_dropped += 1
            else:
                s = sum(Fraction(1, coeffs[j] * coeffs[j - 1]) for j in range(1, window))
                t.divergent += s > threshold
    return t


@dataclass
class MonteCarloReport:
    seed: int
    samples: int
    k: int
    bits: int
    dropped: int
    estimates: dict
    conditional: dict
    divergence: Optional[dict]

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "samples": self.samples,
            "k_index": self.k,
            "bits": self.bits,
            "dropped": self.dropped,
            "estimates": {str(n): v for n, v in self.estimates.items()},
            "conditional_1_given_1": self.conditional,
            "divergence": self.divergence,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "empirical", "limit", "stderr"])
        for n, e in self.estimates.items():
            w.writerow([n, f"{e['empirical']:.6f}", f"{e['limit']:.6f}", f"{e['stderr']:.6f}"])
        c = self.conditional
        w.writerow(["1|1", f"{c['empirical']:.6f}", f"{c['limit']:.6f}", f"{c['stderr']:.6f}"])
        return buf.getvalue()


def _se(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n) if n else float("nan")


def montecarlo(
    seed: int,
    samples: int,
    k_index: int = 20,
    bits: int = 256,
    window: Optional[int] = None,
    threshold=None,
    workers: int = 1,
) -> MonteCarloReport:
    """Empirical ``P(a_k = n)``, ``P(a_k = 1 | a_{k-1} = 1)`` and a divergence scan.

    The stream is split into fixed chunks of CHUNK samples, each with its own
    spawned seed, so results do not depend on ``workers``.  With ``window``
    set, every sample is also checked for ``sum_{j<=W} 1/(a_j a_{j-1})``
    exceeding ``threshold`` (default W/100); that indicator is a heuristic
    finite-window proxy for divergence.  The scan needs about 3.4 bits per
    coefficient, so ``bits`` is raised to ``8 W`` when the window asks for it.
    """
    if samples < 1:
        raise InvalidInput("samples must be >= 1")
    if k_index < 1:
        raise InvalidInput("k_index must be >= 1")
    if window is not None and window < 2:
        raise InvalidInput("window must be >= 2")
    if window:
        bits = max(bits, 8 * window)
        threshold = Fraction(window, 100) if threshold is None else Fraction(threshold)
    sizes = [CHUNK] * (samples // CHUNK) + ([samples % CHUNK] if samples % CHUNK else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(s, n, k_index, bits, window, threshold) for s, n in zip(seqs, sizes)]
    total = _Tally()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for t in ex.map(_run_chunk, jobs):
                total.merge(t)
    else:
        for job in jobs:
            total.merge(_run_chunk(job))
    kept = total.samples - total.dropped
    estimates = {}
    for n in range(1, 11):
        p = total.counts.get(n, 0) / kept if kept else float("nan")
        estimates[n] = {"empirical": p, "limit": gk_limit(n), "stderr": _se(p, kept)}
    estimates[1]["quoted"] = LIMIT_1
    pc = total.both_one / total.prev_one if total.prev_one else float("nan")
    conditional = {
        "empirical": pc,
        "limit": gk_conditional(1, 1),
        "stderr": _se(pc, total.prev_one),
        "given_count": total.prev_one,
        "quoted": LIMIT_1_GIVEN_1,
    }
    divergence = None
    if window:
        ok = total.scanned - total.scan_dropped
        frac = total.divergent / ok if ok else float("nan")
        divergence = {
            "window": window,
            "threshold": f"{threshold.numerator}/{threshold.denominator}",
            "fraction_exceeding": frac,
            "stderr": _se(frac, ok),
            "dropped": total.scan_dropped,
            "heuristic": True,
        }
    return MonteCarloReport(seed, samples, k_index, bits, total.dropped, estimates, conditional, divergence)
