"""Closed intervals with exact rational endpoints.

Only the handful of operations the certified computations need: affine
arithmetic, products, absolute value and the distance to the nearest integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Number = Union[int, Fraction]

# 3.14159265... < 355/113 = 3.14159292...
PI_UPPER = Fraction(355, 113)
# 333/106 = 3.14150943... < pi
PI_LOWER = Fraction(333, 106)


def _q(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", _q(self.lo))
        object.__setattr__(self, "hi", _q(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: Number) -> "Interval":
        return cls(x, x)

    @classmethod
    def hull(cls, *xs: Number) -> "Interval":
        return cls(min(xs), max(xs))

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def is_point(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        return Interval(self.lo + other, self.hi + other)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Interval):
            ends = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
            return Interval(min(ends), max(ends))
        other = _q(other)
        if other >= 0:
            return Interval(self.lo * other, self.hi * other)
        return Interval(self.hi * other, self.lo * other)

    __rmul__ = __mul__

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(0, max(-self.lo, self.hi))

    def floor(self):
        """Common floor of every point, or None when an integer lies inside (lo, hi]."""
        f = math.floor(self.lo)
        return f if math.floor(self.hi) == f else None

    def dist_to_int(self) -> "Interval":
        """Range of ``x -> |x - round(x)|`` over the interval."""
        if self.width >= 1:
            return Interval(0, Fraction(1, 2))
        n = math.floor(self.lo)
        # work on [lo - n, hi - n] inside [0, 2)
        a, b = self.lo - n, self.hi - n
        candidates = [a, b]
        lo_val = min(abs(x - round_half_down(x)) for x in candidates)
        hi_val = max(abs(x - round_half_down(x)) for x in candidates)
        for integer in (0, 1, 2):
            if a <= integer <= b:
                lo_val = Fraction(0)
        for half in (Fraction(1, 2), Fraction(3, 2)):
            if a <= half <= b:
                hi_val = Fraction(1, 2)
        return Interval(lo_val, hi_val)

    def frac(self) -> "Interval":
        """Fractional part; raises when an integer lies strictly inside."""
        f = self.floor()
        if f is None:
            if self.hi == math.floor(self.hi) and math.floor(self.lo) == self.hi - 1:
                f = self.hi - 1
            else:
                raise ValueError("fractional part is discontinuous on this interval")
        return self - f

    def __float__(self):
        return float(self.mid)

    def __repr__(self):
        return f"Interval({self.lo}, {self.hi})"


def round_half_down(x: Fraction) -> int:
    """Nearest integer, ties resolved downwards."""
    f = math.floor(x)
    return f if x - f <= Fraction(1, 2) else f + 1


def chord_upper(dist_hi: Fraction) -> Fraction:
    """Upper bound for |e^{2 pi i t} - 1| given dist(t, Z) <= dist_hi."""
    return 2 * PI_UPPER * dist_hi


def chord_lower(dist_lo: Fraction) -> Fraction:
    """Lower bound for |e^{2 pi i t} - 1| given dist(t, Z) >= dist_lo.

    Uses sin(pi d) >= 2d on [0, 1/2].
    """
    return 4 * dist_lo
