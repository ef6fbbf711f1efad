"""Exact continued-fraction arithmetic.

Indexing keeps the convention used throughout the package::

    p_0 = 1, p_1 = a_0, p_k = a_{k-1} p_{k-1} + p_{k-2}
    q_0 = 0, q_1 = 1,   q_k = a_{k-1} q_{k-1} + q_{k-2}

so ``p_k / q_k = [a_0; a_1, ..., a_{k-1}]``.  A :class:`CFNumber` is an
irrational given by a coefficient stream: an explicit prefix followed by an
optional tail rule.  Every real-valued quantity is returned as an
:class:`~rankone.intervals.Interval` with rational endpoints that is
guaranteed to contain the true value.
"""

from __future__ import annotations

import math
import random
import re
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .errors import (
    InsufficientPrecision,
    InvalidInput,
    ParseError,
    RationalInput,
    StreamExhausted,
    TieUnresolved,
)
from .intervals import Interval

# refinement budget for nearest-integer decisions on irrational inputs
MAX_REFINE_BITS = 4096


# ---------------------------------------------------------------------------
# tail rules


@dataclass(frozen=True)
class ConstTail:
    c: int

    def literal(self):
        return f"(const: {self.c})"


@dataclass(frozen=True)
class PeriodicTail:
    block: tuple

    def literal(self):
        return "(period: " + ",".join(map(str, self.block)) + ")"


@dataclass(frozen=True)
class ArithTail:
    """``a_k = c*k + d`` with ``k`` the absolute coefficient index."""

    c: int
    d: int

    def literal(self):
        sign = "+" if self.d >= 0 else "-"
        return f"(arith: {self.c}*k{sign}{abs(self.d)})"


@dataclass(frozen=True)
class RandomTail:
    """Coefficients of a uniform dyadic sample with ``bits`` bits."""

    seed: int
    bits: int = 256

    def literal(self):
        if self.bits == 256:
            return f"(rand: {self.seed})"
        return f"(rand: {self.seed}, {self.bits})"


TailRule = Union[ConstTail, PeriodicTail, ArithTail, RandomTail]


def dyadic_cf(m: int, bits: int, max_terms: Optional[int] = None) -> list[int]:
    """Coefficients shared by every number in ``[m/2^bits, (m+1)/2^bits]``.

    Runs the Gauss map on both endpoints with exact integer arithmetic and
    stops at the first coefficient on which they disagree.  Cylinder sets are
    intervals, so agreement at the endpoints means agreement everywhere.
    """
    den = 1 << bits
    n1, d1 = m, den
    n2, d2 = m + 1, den
    if n2 >= d2 or n1 <= 0:
        return []
    out = []
    while max_terms is None or len(out) < max_terms:
        if n1 == 0 or n2 == 0:
            break
        a1, r1 = divmod(d1, n1)
        a2, r2 = divmod(d2, n2)
        if a1 != a2:
            break
        out.append(a1)
        n1, d1 = r1, n1
        n2, d2 = r2, n2
    return out


# ---------------------------------------------------------------------------
# the number itself


class CFNumber:
    """An irrational number given by its continued-fraction coefficients.

    Immutable apart from internal caches, which only ever grow; a lock keeps
    every reader on a consistent prefix.
    """

    def __init__(
        self,
        prefix: Sequence[int],
        tail: Optional[TailRule] = None,
        *,
        label: Optional[str] = None,
        quadratic: Optional[tuple] = None,
    ):
        prefix = [int(a) for a in prefix]
        if not prefix:
            raise InvalidInput("at least a_0 is required")
        for k, a in enumerate(prefix[1:], start=1):
            if a < 1:
                raise InvalidInput(f"a_{k} = {a}; coefficients past a_0 must be >= 1")
        if isinstance(tail, ConstTail) and tail.c < 1:
            raise InvalidInput("constant tail must be >= 1")
        if isinstance(tail, PeriodicTail):
            if not tail.block or min(tail.block) < 1:
                raise InvalidInput("periodic block must be non-empty with entries >= 1")
        if isinstance(tail, ArithTail):
            if tail.c < 0 or tail.c * len(prefix) + tail.d < 1:
                raise InvalidInput("arithmetic tail must stay >= 1 for every index")
        self.prefix = tuple(prefix)
        self.tail = tail
        self.quadratic = quadratic
        self._label = label
        self._lock = threading.Lock()
        self._coeffs = list(prefix)
        self._p = [1, prefix[0]]
        self._q = [0, 1]
        self._random_tail = None
        if isinstance(tail, RandomTail):
            m = random.Random(tail.seed).getrandbits(tail.bits)
            self._random_tail = dyadic_cf(m, tail.bits)

    # -- identity -----------------------------------------------------------

    @property
    def label(self) -> str:
        return self._label or self.literal()

    def literal(self) -> str:
        head = str(self.prefix[0])
        rest = ", ".join(map(str, self.prefix[1:]))
        body = f"[{head}; {rest}" if rest else f"[{head};"
        if self.tail is not None:
            body += " " + self.tail.literal()
        return body + "]"

    def __repr__(self):
        return f"CFNumber({self.label!r})"

    @property
    def exact(self):
        return None

    @property
    def period(self) -> Optional[tuple]:
        if isinstance(self.tail, PeriodicTail):
            return self.tail.block
        if isinstance(self.tail, ConstTail):
            return (self.tail.c,)
        return None

    def reduced(self) -> "CFNumber":
        """The same number modulo 1 (``a_0`` replaced by 0)."""
        return CFNumber((0,) + self.prefix[1:], self.tail, label=f"frac({self.label})")

    # -- coefficients -------------------------------------------------------

    def _tail_value(self, k: int) -> int:
        tail = self.tail
        j = k - len(self.prefix)
        if tail is None:
            raise StreamExhausted(f"a_{k} requested but only {len(self.prefix)} coefficients given")
        if isinstance(tail, ConstTail):
            return tail.c
        if isinstance(tail, PeriodicTail):
            return tail.block[j % len(tail.block)]
        if isinstance(tail, ArithTail):
            return tail.c * k + tail.d
        if j >= len(self._random_tail):
            raise StreamExhausted(
                f"a_{k} is not determined by a {tail.bits}-bit sample (seed {tail.seed})"
            )
        return self._random_tail[j]

    def coefficient(self, k: int) -> int:
        if k < 0:
            raise InvalidInput("coefficient index must be >= 0")
        if k < len(self._coeffs):
            return self._coeffs[k]
        with self._lock:
            while len(self._coeffs) <= k:
                self._coeffs.append(self._tail_value(len(self._coeffs)))
            return self._coeffs[k]

    def coefficients(self, n: int) -> list[int]:
        """``[a_0, ..., a_{n-1}]``."""
        if n > 0:
            self.coefficient(n - 1)
        return self._coeffs[:n]

    def available(self) -> Optional[int]:
        """Number of coefficients the source can supply, None when unlimited."""
        if self.tail is None:
            return len(self.prefix)
        if isinstance(self.tail, RandomTail):
            return len(self.prefix) + len(self._random_tail)
        return None

    # -- convergents --------------------------------------------------------

    def _extend(self, n: int):
        if n < len(self._q):
            return
        if n >= 1:
            self.coefficient(n - 1)
        with self._lock:
            while len(self._q) <= n:
                k = len(self._q)
                a = self._coeffs[k - 1]
                self._p.append(a * self._p[k - 1] + self._p[k - 2])
                self._q.append(a * self._q[k - 1] + self._q[k - 2])

    def p(self, k: int) -> int:
        self._extend(k)
        return self._p[k]

    def q(self, k: int) -> int:
        self._extend(k)
        return self._q[k]

    def pq(self, k: int) -> tuple[int, int]:
        self._extend(k)
        return self._p[k], self._q[k]

    # -- enclosures ---------------------------------------------------------

    def enclosure_at(self, n: int) -> Interval:
        """Hull of ``p_n/q_n`` and ``p_{n+1}/q_{n+1}``; contains alpha for n >= 1."""
        if n < 1:
            raise InvalidInput("enclosures start at n = 1")
        try:
            p0, q0 = self.pq(n)
            p1, q1 = self.pq(n + 1)
        except StreamExhausted as exc:
            raise InsufficientPrecision(str(exc)) from exc
        return Interval.hull(Fraction(p0, q0), Fraction(p1, q1))

    def enclosure_index(self, width: Fraction) -> int:
        width = Fraction(width)
        if width <= 0:
            raise InvalidInput("width must be positive")
        n = 1
        while True:
            try:
                qn, qn1 = self.q(n), self.q(n + 1)
            except StreamExhausted as exc:
                raise InsufficientPrecision(str(exc)) from exc
            if Fraction(1, qn * qn1) <= width:
                return n
            n += 1

    def enclose(self, width) -> Interval:
        return self.enclosure_at(self.enclosure_index(width))

    # -- certified properties of the whole stream ---------------------------

    def certified_bound(self) -> Optional[int]:
        """max a_k over k >= 1 when a tail rule forces boundedness, else None."""
        body = list(self.prefix[1:])
        if isinstance(self.tail, ConstTail):
            return max(body + [self.tail.c])
        if isinstance(self.tail, PeriodicTail):
            return max(body + list(self.tail.block))
        if isinstance(self.tail, ArithTail) and self.tail.c == 0:
            return max(body + [self.tail.d])
        return None

    def certified_unbounded(self) -> bool:
        return isinstance(self.tail, ArithTail) and self.tail.c > 0

    def golden_type(self) -> Optional[bool]:
        """True/False when the tail rule decides it, None otherwise."""
        tail = self.tail
        if isinstance(tail, ConstTail):
            return tail.c == 1
        if isinstance(tail, PeriodicTail):
            return all(a == 1 for a in tail.block)
        if isinstance(tail, ArithTail):
            return tail.c == 0 and tail.d == 1
        return None

    def residue_period(self, modulus: int) -> Optional[tuple[int, int]]:
        """(K0, L) with a_{k+L} = a_k (mod modulus) for every k >= K0, if a rule gives one."""
        tail = self.tail
        start = max(len(self.prefix), 1)
        if isinstance(tail, ConstTail):
            return start, 1
        if isinstance(tail, PeriodicTail):
            return start, len(tail.block)
        if isinstance(tail, ArithTail):
            g = math.gcd(tail.c, modulus)
            return start, modulus // g if tail.c % modulus else 1
        return None


# ---------------------------------------------------------------------------
# certified reals other than CFNumber


@dataclass(frozen=True)
class ExactReal:
    value: Fraction

    @property
    def exact(self):
        return self.value

    def enclose(self, width=None) -> Interval:
        return Interval.point(self.value)

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class FracMultiple:
    """``frac(n * alpha)`` for a CFNumber alpha."""

    cf: CFNumber
    n: int

    @property
    def exact(self):
        return Fraction(0) if self.n == 0 else None

    def enclose(self, width) -> Interval:
        if self.n == 0:
            return Interval.point(0)
        width = Fraction(width)
        while True:
            box = self.cf.enclose(width / abs(self.n)) * self.n
            f = box.floor()
            if f is not None:
                return box - f
            width /= 2
            if width < Fraction(1, 1 << MAX_REFINE_BITS):
                raise InsufficientPrecision("cannot separate n*alpha from an integer")

    def __str__(self):
        return f"frac({self.n}*{self.cf.label})"


def frac_multiple(cf: CFNumber, n: int) -> FracMultiple:
    return FracMultiple(cf, n)


def as_real(x):
    if isinstance(x, (CFNumber, ExactReal, FracMultiple)):
        return x
    if isinstance(x, (int, Fraction)):
        return ExactReal(Fraction(x))
    if isinstance(x, str):
        return ExactReal(Fraction(x))
    if hasattr(x, "enclose"):
        return x
    raise InvalidInput(f"cannot interpret {x!r} as a certified real")


# ---------------------------------------------------------------------------
# constructors


def _is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def cf_from_quadratic(u: int, v: int, w: int, d: int) -> CFNumber:
    """Continued fraction of ``(u + v*sqrt(d)) / w`` with its detected period.

    Works on the reduced surd ``(P + sqrt(D)) / Q`` with ``Q | D - P^2``,
    so every step is integer arithmetic.
    """
    if w == 0:
        raise InvalidInput("denominator w must be non-zero")
    if d < 2 or _is_square(d) or v == 0:
        raise RationalInput(f"({u}+{v}*sqrt({d}))/{w} is rational")
    if v < 0:
        u, v, w = -u, -v, -w
    P = u * abs(w)
    D = v * v * d * w * w
    Q = w * abs(w)
    s = math.isqrt(D)
    seen: dict[tuple[int, int], int] = {}
    coeffs: list[int] = []
    while (P, Q) not in seen:
        seen[(P, Q)] = len(coeffs)
        if Q > 0:
            a = (P + s) // Q
        else:
            a = -((P + s) // -Q) - 1
        coeffs.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
    start = seen[(P, Q)]
    if start == 0:
        # purely periodic: keep a_0 in the prefix and rotate the block
        prefix = coeffs[:1]
        block = coeffs[1:] + coeffs[:1]
    else:
        prefix = coeffs[:start]
        block = coeffs[start:]
    label = f"({u}+{v}*sqrt({d}))/{w}"
    return CFNumber(prefix, PeriodicTail(tuple(block)), label=label, quadratic=(u, v, w, d))


# ---------------------------------------------------------------------------
# literal parsing

ALIASES = {
    "golden": (1, 1, 2, 5),
    "phi": (1, 1, 2, 5),
}

_QUAD = re.compile(
    r"^\(\s*(?P<u>[+-]?\d+)\s*(?P<sign>[+-])\s*(?P<v>\d+)\s*\*\s*sqrt\(\s*(?P<d>\d+)\s*\)\s*\)"
    r"\s*/\s*(?P<w>[+-]?\d+)$"
)
_SQRT = re.compile(r"^sqrt\(?\s*(?P<d>\d+)\s*\)?$")


def parse_alpha(text: str) -> CFNumber:
    """Parse a CF literal, a quadratic literal or a named alias."""
    raw = text
    t = text.strip()
    if not t:
        raise ParseError("empty alpha literal", raw, 0)
    low = t.lower()
    if low in ALIASES:
        return cf_from_quadratic(*ALIASES[low])
    m = _SQRT.match(low)
    if m:
        return cf_from_quadratic(0, 1, 1, int(m.group("d")))
    m = _QUAD.match(t)
    if m:
        v = int(m.group("v")) * (-1 if m.group("sign") == "-" else 1)
        return cf_from_quadratic(int(m.group("u")), v, int(m.group("w")), int(m.group("d")))
    if t.startswith("("):
        raise ParseError("malformed quadratic literal; expected (u+v*sqrt(d))/w", raw, raw.index("("))
    if t.startswith("["):
        return _CFLiteralParser(raw).parse()
    raise ParseError("expected '[', '(' or a named alpha", raw, raw.index(t[0]))


class _CFLiteralParser:
    def __init__(self, text):
        self.text = text
        self.i = 0

    def fail(self, msg):
        raise ParseError(msg, self.text, min(self.i, len(self.text)))

    def ws(self):
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def peek(self):
        self.ws()
        return self.text[self.i] if self.i < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            self.fail(f"expected {ch!r}")
        self.i += 1

    def integer(self):
        self.ws()
        m = re.compile(r"[+-]?\d+").match(self.text, self.i)
        if not m:
            self.fail("expected an integer")
        self.i = m.end()
        return int(m.group())

    def parse(self) -> CFNumber:
        self.expect("[")
        a0 = self.integer()
        coeffs = [a0]
        tail = None
        if self.peek() == ";":
            self.i += 1
            while self.peek() not in ("]", "(", ""):
                coeffs.append(self.integer())
                if self.peek() == ",":
                    self.i += 1
        if self.peek() == "(":
            tail = self.tail()
        self.expect("]")
        if tail is None and self.peek() == "(":
            tail = self.tail()
        if self.peek() != "":
            self.fail("unexpected trailing text")
        try:
            return CFNumber(coeffs, tail)
        except InvalidInput as exc:
            raise ParseError(str(exc), self.text, 0) from exc

    def tail(self):
        self.expect("(")
        self.ws()
        m = re.compile(r"[a-z]+").match(self.text, self.i)
        if not m:
            self.fail("expected tail kind (period, const, arith, rand)")
        kind = m.group()
        kind_at = self.i
        self.i = m.end()
        self.expect(":")
        if kind == "period":
            block = [self.integer()]
            while self.peek() == ",":
                self.i += 1
                block.append(self.integer())
            rule = PeriodicTail(tuple(block))
        elif kind == "const":
            rule = ConstTail(self.integer())
        elif kind == "arith":
            self.ws()
            m = re.compile(r"([+-]?\d+)?\s*\*?\s*k\s*(?:([+-])\s*(\d+))?").match(self.text, self.i)
            if not m or not m.group(0).strip():
                self.fail("expected c*k+d")
            self.i = m.end()
            c = int(m.group(1)) if m.group(1) else 1
            d = int(m.group(3) or 0) * (-1 if m.group(2) == "-" else 1)
            rule = ArithTail(c, d)
        elif kind == "rand":
            seed = self.integer()
            bits = 256
            if self.peek() == ",":
                self.i += 1
                bits = self.integer()
            rule = RandomTail(seed, bits)
        else:
            self.i = kind_at
            self.fail(f"unknown tail kind {kind!r}")
        self.expect(")")
        return rule


# ---------------------------------------------------------------------------
# operations


@dataclass(frozen=True)
class Convergents:
    p: tuple
    q: tuple

    @property
    def N(self) -> int:
        return len(self.q) - 1

    def determinant(self, k: int) -> int:
        """``p_{k+1} q_k - p_k q_{k+1}``; equals ``(-1)^(k+1)``."""
        return self.p[k + 1] * self.q[k] - self.p[k] * self.q[k + 1]

    def pairs(self):
        return list(zip(self.p, self.q))


def convergents(cf: CFNumber, N: int) -> Convergents:
    if N < 1:
        raise InvalidInput("N must be >= 1")
    cf._extend(N)
    return Convergents(tuple(cf._p[: N + 1]), tuple(cf._q[: N + 1]))


def coefficient_stream(cf: CFNumber, k: int) -> int:
    return cf.coefficient(k)


@dataclass(frozen=True)
class ApproxError:
    k: int
    epsilon: Interval
    zeta: Interval
    crude_bound: Fraction
    sign: int  # sign of alpha - p_k/q_k


def approx_errors(cf: CFNumber, k: int, precision=Fraction(1, 10**12)) -> ApproxError:
    """Certified enclosures of ``|alpha - p_k/q_k|`` and ``|q_k alpha - p_k|``."""
    if k < 1:
        raise InvalidInput("k must be >= 1")
    precision = Fraction(precision)
    if precision <= 0:
        raise InvalidInput("precision must be positive")
    try:
        pk, qk = cf.pq(k)
        qk1 = cf.q(k + 1)
    except StreamExhausted as exc:
        raise InsufficientPrecision(str(exc)) from exc
    # zeta width is q_k * width(alpha); the bracket at n > k excludes p_k/q_k
    n = max(cf.enclosure_index(precision / qk), k + 1)
    alpha = cf.enclosure_at(n)
    diff = alpha - Fraction(pk, qk)
    sign = 1 if diff.lo > 0 else -1
    eps = abs(diff)
    return ApproxError(k, eps, eps * qk, Fraction(1, qk * qk1), sign)


def zeta_interval(cf: CFNumber, k: int, precision=Fraction(1, 10**30)) -> Interval:
    if k == 0:
        return Interval.point(1)  # |q_0 alpha - p_0| = |0 - 1|
    return approx_errors(cf, k, precision).zeta


def telescoping_gap(cf: CFNumber, ell: int, W: int, precision=Fraction(1, 10**40)):
    """Both sides of the finite telescoping identity

        sum_{i=ell}^{W} (a_i - 1) zeta_i
            = a_ell zeta_ell - sum_{i=ell+2}^{W} zeta_i - zeta_W - zeta_{W+1}

    as intervals; they must overlap.
    """
    z = {i: zeta_interval(cf, i, precision) for i in range(ell, W + 2)}
    lhs = Interval.point(0)
    for i in range(ell, W + 1):
        lhs = lhs + z[i] * (cf.coefficient(i) - 1)
    rhs = z[ell] * cf.coefficient(ell) - z[W] - z[W + 1]
    for i in range(ell + 2, W + 1):
        rhs = rhs - z[i]
    return lhs, rhs


@dataclass(frozen=True)
class Verdict:
    value: object
    certified: bool
    note: str = ""


@dataclass(frozen=True)
class Classification:
    window: int
    coefficients: tuple  # a_1 .. a_W
    golden_type: Verdict
    coefficient_bound: Verdict  # value: max over window; note says bounded or not
    bounded: Verdict
    measure_verdict: Verdict
    partial_sums: tuple  # S_2 .. S_W, exact
    partial_products: tuple  # mu_1 .. mu_W, exact


def finiteness_partial_sums(coeffs: Sequence[int]) -> list[Fraction]:
    """``S_W = sum_{k=2}^{W} 1/(a_k a_{k-1})`` for W = 2..len; coeffs[0] is a_1."""
    out, s = [], Fraction(0)
    for k in range(1, len(coeffs)):
        s += Fraction(1, coeffs[k] * coeffs[k - 1])
        out.append(s)
    return out


def measure_partial_products(cf: CFNumber, W: int, mu1=Fraction(1)) -> list[Fraction]:
    """``mu_1 .. mu_W`` via ``mu_{k+1} = mu_k (1 + q_{k-1}/(a_k q_k))``."""
    out = [Fraction(mu1)]
    for k in range(1, W):
        out.append(out[-1] * (1 + Fraction(cf.q(k - 1), cf.coefficient(k) * cf.q(k))))
    return out


def classify(cf: CFNumber, window: int) -> Classification:
    if window < 2:
        raise InvalidInput("window must be >= 2")
    coeffs = tuple(cf.coefficient(k) for k in range(1, window + 1))
    golden = cf.golden_type()
    if golden is None:
        golden_v = Verdict(None, False, "unknown beyond window")
    else:
        golden_v = Verdict(golden, True, "decided by tail rule")
    bound = cf.certified_bound()
    wmax = max(coeffs)
    if bound is not None:
        bounded = Verdict(True, True, f"all coefficients <= {bound}")
    elif cf.certified_unbounded():
        bounded = Verdict(False, True, "arithmetic tail grows without bound")
    else:
        bounded = Verdict(None, False, f"max over window is {wmax}; heuristic only")
    sums = finiteness_partial_sums(coeffs)
    prods = measure_partial_products(cf, window)
    if bound is not None or golden:
        measure = Verdict("infinite", True, "bounded coefficients: sum of 1/(a_k a_{k-1}) diverges")
    elif cf.certified_unbounded():
        tail = cf.tail
        measure = Verdict(
            "finite",
            True,
            f"a_k = {tail.c}k{tail.d:+d} gives a convergent sum of 1/(a_k a_(k-1))",
        )
    else:
        half = window // 2
        growth = sums[-1] - (sums[half - 2] if half >= 2 else 0)
        lean = "infinite" if growth * 20 > window - half else "finite"
        measure = Verdict(
            "undecided", False, f"heuristic lean: {lean} (S_W = {float(sums[-1]):.4g})"
        )
    return Classification(
        window=window,
        coefficients=coeffs,
        golden_type=golden_v,
        coefficient_bound=Verdict(wmax, bound is not None, f"certified bound {bound}" if bound else "window max"),
        bounded=bounded,
        measure_verdict=measure,
        partial_sums=tuple(sums),
        partial_products=tuple(prods),
    )


# ---------------------------------------------------------------------------
# addresses


@dataclass(frozen=True)
class AddressEntry:
    k: int
    p: int
    eps: Interval
    tie: bool = False


@dataclass(frozen=True)
class Address:
    beta: object
    entries: tuple

    @property
    def eps_upper(self):
        return [e.eps.hi for e in self.entries]

    def trend(self) -> dict:
        ups = self.eps_upper
        tail = ups[len(ups) // 2 :]
        return {
            "monotone_tail": all(x >= y for x, y in zip(tail, tail[1:])),
            "last": ups[-1] if ups else None,
        }


def nearest_integer(real, q: int, precision=Fraction(1, 10**15)):
    """``(p, |p - q*beta|, tie)`` with p the nearest integer to q*beta.

    For exact rational beta a half-integer is an exact tie: eps is 1/2 and p
    is rounded down, flagged by ``tie``.  Irrational beta is refined until
    the rounding is decided and the eps enclosure is narrower than
    ``precision``.
    """
    real = as_real(real)
    exact = real.exact
    if exact is not None:
        x = exact * q
        fl = math.floor(x)
        rem = x - fl
        half = Fraction(1, 2)
        if rem == half:
            return fl, Interval.point(half), True
        p = fl if rem < half else fl + 1
        return p, Interval.point(abs(x - p)), False
    precision = Fraction(precision)
    width = min(Fraction(1, 8), precision) / max(q, 1)
    for _ in range(MAX_REFINE_BITS):
        box = real.enclose(width) * q
        shifted = box + Fraction(1, 2)
        f = shifted.floor()
        if f is not None and shifted.lo != f:
            return f, abs(box - f), False
        width /= 2
    raise TieUnresolved(f"q*beta with q = {q} sits on a half-integer within the refinement budget")


def address(cf: CFNumber, beta, K: int, precision=Fraction(1, 10**15)) -> Address:
    beta = as_real(beta)
    entries = []
    for k in range(1, K + 1):
        qk = cf.q(k)
        p, eps, tie = nearest_integer(beta, qk, precision)
        entries.append(AddressEntry(k, p, eps, tie))
    return Address(beta, tuple(entries))


def height_residue_cycle(cf: CFNumber, modulus: int):
    """Eventual cycle of ``q_k mod modulus`` when a tail rule makes it periodic.

    Returns ``(k_start, residues)`` such that ``q_k mod modulus`` for
    k >= k_start repeats ``residues`` forever, or None when the source has no
    rule.  The state ``(phase, q_{k-1}, q_k) mod modulus`` determines its
    successor, so the first repeated state closes the cycle.
    """
    per = cf.residue_period(modulus)
    if per is None:
        return None
    K0, L = per
    K0 = max(K0, 1)
    k = K0
    qm1, qk = cf.q(k - 1) % modulus, cf.q(k) % modulus
    first_seen: dict = {}
    trail: list[int] = []
    while True:
        state = ((k - K0) % L, qm1, qk)
        if state in first_seen:
            k0 = first_seen[state]
            return k0, trail[k0 - K0 :]
        first_seen[state] = k
        trail.append(qk)
        a = cf.coefficient(k) % modulus
        qm1, qk = qk, (a * qk + qm1) % modulus
        k += 1
