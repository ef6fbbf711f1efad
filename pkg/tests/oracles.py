"""Brute-force reference implementations used as test oracles.

Nothing here imports the tower, eigen or nonsingular code: columns are built
by literally cutting interval lists, and T is the piecewise affine map that
sends each level onto the next one.
"""

from __future__ import annotations

import bisect
from fractions import Fraction

import mpmath
from sympy.ntheory.continued_fraction import continued_fraction_periodic


# -- continued fractions ------------------------------------------------------


def surd_coefficients(u, v, w, d, n):
    """First n coefficients of (u + v sqrt d)/w from sympy's periodic CF."""
    # (u + v sqrt d)/w = (u + sqrt(v^2 d))/w when v > 0
    if v < 0:
        u, v, w = -u, -v, -w
    cf = continued_fraction_periodic(u, w, v * v * d)
    head = [x for x in cf if not isinstance(x, list)]
    block = cf[-1] if isinstance(cf[-1], list) else []
    out = list(head)
    while len(out) < n:
        out.extend(block)
    return out[:n]


def float_coefficients(x, n, dps=400):
    """Gauss-map iteration on an mpmath number at high precision."""
    out = []
    with mpmath.workdps(dps):
        x = mpmath.mpf(x) if not callable(x) else x()
        for _ in range(n):
            a = int(mpmath.floor(x))
            out.append(a)
            x = 1 / (x - a)
    return out


def convergents_from(coeffs):
    """Indexing p_0 = 1, q_0 = 0, p_1 = a_0, q_1 = 1."""
    p = [1, coeffs[0]]
    q = [0, 1]
    for k in range(1, len(coeffs)):
        p.append(coeffs[k] * p[-1] + p[-2])
        q.append(coeffs[k] * q[-1] + q[-2])
    return p, q


# -- cutting and stacking -----------------------------------------------------


def build_columns(a, N, fractions=None):
    """Columns C_1..C_N as lists of (lo, hi) levels, bottom to top.

    ``a[k]`` is a_k.  ``fractions(k)`` gives the piece fractions of stage k
    (default equal).  Spacers get the width of the top level of the last
    sub-column and are appended to the right of the support.
    """
    cols = {1: [(Fraction(0), Fraction(1))]}
    end = Fraction(1)
    for k in range(1, N):
        col = cols[k]
        fr = fractions(k) if fractions else [Fraction(1, a[k])] * a[k]
        new = []
        start = Fraction(0)
        for f in fr:
            for lo, hi in col:
                new.append((lo + (hi - lo) * start, lo + (hi - lo) * (start + f)))
            start += f
        nsp = len(cols[k - 1]) if k > 1 else 0
        w = new[-1][1] - new[-1][0]
        for _ in range(nsp):
            new.append((end, end + w))
            end += w
        cols[k + 1] = new
    return cols


class ColumnMap:
    """T on C_N: level i goes affinely onto level i + 1."""

    def __init__(self, column):
        self.column = column
        order = sorted(range(len(column)), key=lambda i: column[i][0])
        self.starts = [column[i][0] for i in order]
        self.index = order

    def level_of(self, x0, x1):
        j = bisect.bisect_right(self.starts, x0) - 1
        i = self.index[j]
        lo, hi = self.column[i]
        if not (lo <= x0 and x1 <= hi):
            raise ValueError("piece straddles a level boundary")
        return i

    def split(self, pieces):
        """Cut every piece at level boundaries."""
        out = []
        for x0, x1 in pieces:
            while x0 < x1:
                j = bisect.bisect_right(self.starts, x0) - 1
                hi = self.column[self.index[j]][1]
                out.append((x0, min(x1, hi)))
                x0 = min(x1, hi)
        return out

    def step(self, pieces, inverse=False):
        out = []
        for x0, x1 in self.split(pieces):
            i = self.level_of(x0, x1)
            t = i - 1 if inverse else i + 1
            if not 0 <= t < len(self.column):
                raise OverflowError("orbit leaves the column")
            lo, hi = self.column[i]
            lo2, hi2 = self.column[t]
            s = (hi2 - lo2) / (hi - lo)
            out.append((lo2 + (x0 - lo) * s, lo2 + (x1 - lo) * s))
        return out

    def push(self, pieces, p):
        for _ in range(abs(p)):
            pieces = self.step(pieces, inverse=p < 0)
        return pieces


def measure(pieces):
    return sum((b - a for a, b in pieces), Fraction(0))


def normalize(pieces):
    out = []
    for a, b in sorted(pieces):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def intersect(A, B):
    A, B = normalize(A), normalize(B)
    out, i, j = [], 0, 0
    while i < len(A) and j < len(B):
        lo = max(A[i][0], B[j][0])
        hi = min(A[i][1], B[j][1])
        if lo < hi:
            out.append((lo, hi))
        if A[i][1] < B[j][1]:
            i += 1
        else:
            j += 1
    return out


def return_ratio(cols, j, ell, p, depth):
    """mu(T^p I cap I)/mu(I) for level ell of C_j, computed in C_depth."""
    I = [cols[j][ell]]
    img = ColumnMap(cols[depth]).push(I, p)
    return measure(intersect(img, I)) / measure(I)
