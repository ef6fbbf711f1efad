"""Cutting-and-stacking tower of ``T_alpha`` on exact rational intervals.

Column ``C_k`` has height ``q_k``.  ``C_{k+1}`` is obtained by cutting every
level of ``C_k`` into ``a_k`` pieces of equal width, stacking the pieces
left to right, and putting ``q_{k-1}`` spacer levels on top.

Layout conventions (recorded in every dump):

* ``C_1 = [0, mu_1)``;
* sub-columns are cut left to right and stacked bottom to top in that order;
* spacers are fresh intervals appended contiguously to the right of the
  current support, so the support of ``C_k`` is exactly ``[0, mu_k)``.

A point is addressed by a :class:`PointCode`: the first stage containing it,
its level there, and the sub-column digits chosen at every later stage.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .cf import CFNumber
from .errors import (
    DepthCapExceeded,
    DepthUnavailable,
    GoldenTypeRejected,
    InvalidInput,
    NeedsDeeperStage,
    StageMismatch,
)
from .intervals import Interval

CONVENTIONS = {
    "base_column": "C_1 = [0, mu_1)",
    "subcolumn_order": "cut left to right, stacked bottom to top in that order",
    "spacer_placement": "appended contiguously to the right of the current support",
}

# numpy index arithmetic is int64
MAX_INDEX = 1 << 62
MAX_LEVELSET = 50_000_000


def depth_cap() -> int:
    return int(os.environ.get("RANKONE_DEPTH_CAP", "64"))


@dataclass(frozen=True)
class PointCode:
    """Symbolic address of a point.

    ``digits[i - k_x]`` is the sub-column chosen when ``C_i`` is cut; digits
    past the stored ones are zero.
    """

    k_x: int
    ell: int
    digits: tuple = ()

    def digit(self, i: int) -> int:
        j = i - self.k_x
        if j < 0:
            raise InvalidInput(f"stage {i} precedes the first stage {self.k_x}")
        return self.digits[j] if j < len(self.digits) else 0

    def digits_from(self, i: int) -> tuple:
        return self.digits[max(i - self.k_x, 0) :]

    def normalized(self) -> "PointCode":
        d = list(self.digits)
        while d and d[-1] == 0:
            d.pop()
        return PointCode(self.k_x, self.ell, tuple(d))


@dataclass(frozen=True)
class StageDescriptor:
    k: int
    height: int
    cuts: Optional[int]
    spacers_added: int
    level_width: Fraction
    measure: Fraction
    # [mu_k, mu_{k+1}): the q_{k-1} spacers stacked on top when forming C_{k+1}
    spacer_block: Optional[Interval] = None

    def spacer_intervals(self) -> Iterator[Interval]:
        if self.spacer_block is None or self.spacers_added == 0:
            return
        w = (self.spacer_block.hi - self.spacer_block.lo) / self.spacers_added
        for s in range(self.spacers_added):
            lo = self.spacer_block.lo + s * w
            yield Interval(lo, lo + w)


@dataclass(frozen=True)
class LevelSet:
    """A finite union of levels of ``C_stage``."""

    stage: int
    indices: np.ndarray
    width: Fraction

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "indices", idx)

    @property
    def count(self) -> int:
        return int(self.indices.size)

    @property
    def measure(self) -> Fraction:
        return self.count * self.width

    def _check(self, other: "LevelSet"):
        if self.stage != other.stage:
            raise StageMismatch(f"stage {self.stage} vs stage {other.stage}")

    def __and__(self, other):
        self._check(other)
        return LevelSet(self.stage, np.intersect1d(self.indices, other.indices, assume_unique=True), self.width)

    def __or__(self, other):
        self._check(other)
        return LevelSet(self.stage, np.union1d(self.indices, other.indices), self.width)

    def __sub__(self, other):
        self._check(other)
        return LevelSet(self.stage, np.setdiff1d(self.indices, other.indices, assume_unique=True), self.width)

    def complement(self, height: int) -> "LevelSet":
        return LevelSet(self.stage, np.setdiff1d(np.arange(height, dtype=np.int64), self.indices), self.width)

    def __eq__(self, other):
        return (
            isinstance(other, LevelSet)
            and self.stage == other.stage
            and self.width == other.width
            and np.array_equal(self.indices, other.indices)
        )

    def runs(self) -> list[list[int]]:
        """Run-length encoding ``[[start, length], ...]``."""
        idx = self.indices
        if idx.size == 0:
            return []
        breaks = np.flatnonzero(np.diff(idx) != 1) + 1
        starts = np.concatenate(([0], breaks))
        ends = np.concatenate((breaks, [idx.size]))
        return [[int(idx[s]), int(e - s)] for s, e in zip(starts, ends)]

    def to_json(self) -> dict:
        return {"stage": self.stage, "width": _fs(self.width), "runs": self.runs()}

    @classmethod
    def from_json(cls, data: dict) -> "LevelSet":
        parts = [np.arange(s, s + n, dtype=np.int64) for s, n in data["runs"]]
        idx = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
        return cls(data["stage"], idx, Fraction(data["width"]))


def _fs(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


class Tower:
    """The columns ``C_1 .. C_depth`` of ``T_alpha``.

    Only O(depth) numbers are stored; levels are computed on demand from the
    heights, so deep towers are cheap.  Build with :func:`build_tower`.
    """

    def __init__(self, cf: CFNumber, depth: int, mu1=Fraction(1)):
        if depth < 1:
            raise InvalidInput("depth must be >= 1")
        self.cf = cf
        self.depth = depth
        self.mu1 = Fraction(mu1)
        # a_1 .. a_{depth-1} are required, a_depth only if the source has it
        self._a = [None] + [cf.coefficient(k) for k in range(1, depth)]
        try:
            self._a.append(cf.coefficient(depth))
        except Exception:
            self._a.append(None)
        self._q = [cf.q(k) for k in range(depth + 1)]
        self._w = [None, self.mu1]
        for k in range(1, depth):
            self._w.append(self._w[k] / self._a[k])
        self._mu = [None] + [self._q[k] * self._w[k] for k in range(1, depth + 1)]
        self.stages = []
        for k in range(1, depth + 1):
            block = Interval(self._mu[k], self._mu[k + 1]) if k < depth else None
            self.stages.append(
                StageDescriptor(
                    k=k,
                    height=self._q[k],
                    cuts=self._a[k],
                    spacers_added=self._q[k - 1],
                    level_width=self._w[k],
                    measure=self._mu[k],
                    spacer_block=block,
                )
            )

    def __repr__(self):
        return f"Tower({self.cf.label}, depth={self.depth})"

    # -- basic data ---------------------------------------------------------

    def _check_stage(self, k: int):
        if not 1 <= k <= self.depth:
            raise DepthUnavailable(f"stage {k} outside the built tower (depth {self.depth})")

    def height(self, k: int) -> int:
        self._check_stage(k)
        return self._q[k]

    def cuts(self, k: int) -> int:
        if k == self.depth and self._a[k] is None:
            raise DepthUnavailable(f"a_{k} is not available")
        self._check_stage(k)
        return self._a[k]

    def level_width(self, k: int) -> Fraction:
        self._check_stage(k)
        return self._w[k]

    def measure(self, k: int) -> Fraction:
        self._check_stage(k)
        return self._mu[k]

    def extended(self, depth: int) -> "Tower":
        if depth <= self.depth:
            return self
        if depth > depth_cap():
            raise DepthCapExceeded(f"depth {depth} exceeds RANKONE_DEPTH_CAP={depth_cap()}")
        return Tower(self.cf, depth, self.mu1)

    def is_spacer(self, k: int, ell: int) -> bool:
        """Level ``ell`` of ``C_k`` was added as a spacer at stage k."""
        return k > 1 and ell >= self._a[k - 1] * self._q[k - 1]

    # -- codes --------------------------------------------------------------

    def validate(self, code: PointCode):
        k = code.k_x
        self._check_stage(k)
        if not 0 <= code.ell < self._q[k]:
            raise InvalidInput(f"level {code.ell} outside C_{k}")
        if k == 1 and code.ell != 0:
            raise InvalidInput("C_1 has a single level")
        if k > 1 and not self.is_spacer(k, code.ell):
            raise InvalidInput(f"level {code.ell} of C_{k} is not new at stage {k}")
        for j, m in enumerate(code.digits):
            i = k + j
            if i < self.depth or (i == self.depth and self._a[i] is not None):
                if not 0 <= m < self._a[i]:
                    raise InvalidInput(f"digit m_{i} = {m} outside [0, a_{i})")

    def decode(self, N: int, ell: int) -> PointCode:
        """The code (first stage, level, digits up to N-1) of level ``ell`` of C_N."""
        self._check_stage(N)
        if not 0 <= ell < self._q[N]:
            raise InvalidInput(f"level {ell} outside C_{N}")
        rev = []
        k, L = N, ell
        while k > 1 and L < self._a[k - 1] * self._q[k - 1]:
            m, L = divmod(L, self._q[k - 1])
            rev.append(m)
            k -= 1
        return PointCode(k, L, tuple(reversed(rev)))

    def level_index(self, code: PointCode, N: int) -> int:
        """``ell + sum_{i=k_x}^{N-1} m_i q_i``: the level of C_N holding the point."""
        self._check_stage(N)
        if N < code.k_x:
            raise NeedsDeeperStage(code.k_x, f"point first appears at stage {code.k_x}")
        return code.ell + sum(code.digit(i) * self._q[i] for i in range(code.k_x, N))

    def _recode(self, N: int, ell: int, code: PointCode) -> PointCode:
        low = self.decode(N, ell)
        return PointCode(low.k_x, low.ell, low.digits + tuple(code.digits_from(N)))

    def apply_T(self, code: PointCode, N: int) -> PointCode:
        L = self.level_index(code, N)
        if L == self._q[N] - 1:
            raise NeedsDeeperStage(N + 1)
        return self._recode(N, L + 1, code)

    def apply_T_inverse(self, code: PointCode, N: int) -> PointCode:
        L = self.level_index(code, N)
        if L == 0:
            raise NeedsDeeperStage(N + 1)
        return self._recode(N, L - 1, code)

    def resolve_T(self, code: PointCode, N: int, inverse=False) -> tuple[PointCode, int]:
        """Apply T (or its inverse) at the first stage >= N where it resolves."""
        step = self.apply_T_inverse if inverse else self.apply_T
        for depth in range(max(N, code.k_x), self.depth + 1):
            try:
                return step(code, depth), depth
            except NeedsDeeperStage:
                continue
        raise NeedsDeeperStage(self.depth + 1)

    # -- geometry -----------------------------------------------------------

    def _first_left(self, k: int, ell: int) -> Fraction:
        if k == 1:
            return Fraction(0)
        return self._mu[k - 1] + (ell - self._a[k - 1] * self._q[k - 1]) * self._w[k]

    def level_interval(self, N: int, ell: int) -> Interval:
        """Level ``ell`` of ``C_N`` as the half-open interval ``[lo, hi)``."""
        code = self.decode(N, ell)
        left = self._first_left(code.k_x, code.ell)
        for j, m in enumerate(code.digits):
            left += m * self._w[code.k_x + j + 1]
        return Interval(left, left + self._w[N])

    def geometric_realize(self, code: PointCode, N: int) -> Interval:
        return self.level_interval(N, self.level_index(code, N))

    # -- level sets ---------------------------------------------------------

    def level_set(self, stage: int, indices: Sequence[int]) -> LevelSet:
        self._check_stage(stage)
        if self._q[stage] >= MAX_INDEX:
            raise DepthCapExceeded(f"q_{stage} too large for level-set arithmetic")
        idx = np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self._q[stage]):
            raise InvalidInput(f"level index outside C_{stage}")
        return LevelSet(stage, idx, self._w[stage])

    def whole_column(self, stage: int) -> LevelSet:
        return self.level_set(stage, np.arange(self.height(stage), dtype=np.int64))

    def refine(self, L: LevelSet, stage: int) -> LevelSet:
        """The same set written as a union of levels of ``C_stage``."""
        if stage < L.stage:
            raise StageMismatch("can only refine to a deeper stage")
        self._check_stage(stage)
        if self._q[stage] >= MAX_INDEX:
            raise DepthCapExceeded(f"q_{stage} too large for level-set arithmetic")
        idx = L.indices
        for k in range(L.stage, stage):
            a, q = self._a[k], self._q[k]
            if idx.size * a > MAX_LEVELSET:
                raise DepthCapExceeded(f"level set at stage {k + 1} would exceed {MAX_LEVELSET} levels")
            idx = (idx[:, None] + q * np.arange(a, dtype=np.int64)[None, :]).ravel()
        return LevelSet(stage, idx, self._w[stage])

    def push_level(self, L: LevelSet, p: int, depth: Optional[int] = None) -> LevelSet:
        """Exact image ``T^p(L)`` as a level set of ``C_depth``."""
        depth = L.stage if depth is None else depth
        L = self.refine(L, depth) if depth > L.stage else L
        if depth < L.stage:
            raise StageMismatch("depth below the level set's stage")
        if p == 0:
            return L
        out = L.indices + p
        if out.size and (out.min() < 0 or out.max() >= self._q[depth]):
            raise NeedsDeeperStage(depth + 1)
        return LevelSet(depth, out, L.width)

    # -- serialization ------------------------------------------------------

    def dump(self) -> dict:
        return {
            "alpha": self.cf.label,
            "conventions": dict(CONVENTIONS),
            "mu1": _fs(self.mu1),
            "depth": self.depth,
            "stages": [
                {
                    "k": s.k,
                    "q_k": s.height,
                    "a_k": s.cuts,
                    "spacers": s.spacers_added,
                    "level_width": _fs(s.level_width),
                    "measure": _fs(s.measure),
                    "support": [[_fs(0), _fs(s.measure)]],
                    "spacer_block": [_fs(s.spacer_block.lo), _fs(s.spacer_block.hi)]
                    if s.spacer_block is not None
                    else None,
                }
                for s in self.stages
            ],
        }


def build_tower(cf: CFNumber, N: int, mu1=Fraction(1)) -> Tower:
    if cf.golden_type():
        raise GoldenTypeRejected(
            f"{cf.label} is of golden type: its coefficients are eventually all 1, so the "
            "columns eventually stop being cut and the resulting map is not rank-one"
        )
    if N > depth_cap():
        raise DepthCapExceeded(f"depth {N} exceeds RANKONE_DEPTH_CAP={depth_cap()}")
    return Tower(cf, N, mu1)


def total_measure(tower: Tower, N: int) -> Fraction:
    """``mu_N = mu_1 prod_{k=1}^{N-1} (1 + q_{k-1}/(a_k q_k))``."""
    tower._check_stage(N)
    mu = tower.mu1
    for k in range(1, N):
        mu *= 1 + Fraction(tower._q[k - 1], tower._a[k] * tower._q[k])
    return mu


def intersection_measure(A: LevelSet, B: LevelSet) -> Fraction:
    return (A & B).measure


def push_level(tower: Tower, L: LevelSet, p: int, depth: Optional[int] = None) -> LevelSet:
    return tower.push_level(L, p, depth)


def geometric_realize(tower: Tower, code: PointCode, N: int) -> Interval:
    return tower.geometric_realize(code, N)


def apply_T(tower: Tower, code: PointCode, N: int) -> PointCode:
    return tower.apply_T(code, N)
