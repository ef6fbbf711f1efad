"""Rank-one cutting-and-stacking transformations built from continued fractions.

Exact-arithmetic toolkit: continued fractions and their convergents, the
tower ``T_alpha`` on rational intervals, its eigenfunction with certified
error bounds, rigidity scans, nonsingular (type III) variants and
Gauss-Kuzmin statistics.
"""

from .cf import (
    CFNumber,
    Convergents,
    ApproxError,
    Address,
    Classification,
    address,
    approx_errors,
    cf_from_quadratic,
    classify,
    coefficient_stream,
    convergents,
    frac_multiple,
    parse_alpha,
)
from .errors import RankOneError
from .intervals import Interval
from .tower import LevelSet, PointCode, Tower, build_tower, total_measure

__version__ = "0.1.0"

__all__ = [
    "Address",
    "ApproxError",
    "CFNumber",
    "Classification",
    "Convergents",
    "Interval",
    "LevelSet",
    "PointCode",
    "RankOneError",
    "Tower",
    "address",
    "approx_errors",
    "build_tower",
    "cf_from_quadratic",
    "classify",
    "coefficient_stream",
    "convergents",
    "frac_multiple",
    "parse_alpha",
    "total_measure",
]
