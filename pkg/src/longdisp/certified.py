"""Certified real arithmetic.

Rational quantities stay as exact ``Fraction`` values.  Anything else
(square roots, rational powers) is a lazy expression that can be enclosed
in an interval with rational endpoints at any requested precision.  Sign
queries refine the precision until the enclosure excludes zero or the bit
cap is reached, in which case the answer is *undecided*.
"""

from __future__ import annotations

import contextlib
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Union

import gmpy2

Number = Union[int, Fraction, "CReal"]

_START_BITS = 64
_max_bits = 512


class PrecisionError(ArithmeticError):
    """A comparison stayed undecided at the maximum working precision."""


def max_bits() -> int:
    return _max_bits


def set_max_bits(bits: int) -> None:
    global _max_bits
    if bits < _START_BITS:
        raise ValueError(f"precision cap must be at least {_START_BITS} bits")
    _max_bits = int(bits)


@contextlib.contextmanager
def precision(bits: int) -> Iterator[None]:
    """Temporarily change the precision cap used by sign queries."""
    old = _max_bits
    set_max_bits(bits)
    try:
        yield
    finally:
        set_max_bits(old)


_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*/\s*(\d+)\s*$")


def parse_rational(text: Union[str, int, float, Fraction]) -> Fraction:
    """Parse ``"3/2"``, ``"0.95"``, ``"7"`` or a number into a Fraction.

    Floats are read through their shortest decimal representation, so
    ``0.1`` becomes ``1/10`` rather than the nearest binary fraction.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        if not math.isfinite(text):
            raise ValueError(f"not a finite number: {text!r}")
        return Fraction(repr(text))
    m = _RATIONAL_RE.match(text)
    if m:
        den = int(m.group(2))
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(int(m.group(1)), den)
    return Fraction(text.strip())


def _round(x: Fraction, bits: int, up: bool) -> Fraction:
    """Round ``x`` outward to ``bits`` significant binary digits."""
    if x == 0:
        return x
    n, d = x.numerator, x.denominator
    shift = bits - (abs(n).bit_length() - d.bit_length())
    if shift >= 0:
        num, den = n << shift, d
    else:
        num, den = n, d << -shift
    m = -((-num) // den) if up else num // den
    if shift >= 0:
        return Fraction(m, 1 << shift)
    return Fraction(m << -shift)


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` with rational endpoints."""

    lo: Fraction
    hi: Fraction

    @staticmethod
    def point(x: Fraction) -> "Interval":
        return Interval(x, x)

    def rounded(self, bits: int) -> "Interval":
        return Interval(_round(self.lo, bits, False), _round(self.hi, bits, True))

    def __add__(self, o: "Interval") -> "Interval":
        return Interval(self.lo + o.lo, self.hi + o.hi)

    def __sub__(self, o: "Interval") -> "Interval":
        return Interval(self.lo - o.hi, self.hi - o.lo)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, o: "Interval") -> "Interval":
        ps = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(min(ps), max(ps))

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def reciprocal(self) -> "Interval":
        if self.contains_zero():
            raise ZeroDivisionError("interval contains zero")
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, o: "Interval") -> "Interval":
        return self * o.reciprocal()

    def absolute(self) -> "Interval":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(Fraction(0), max(-self.lo, self.hi))

    def root(self, n: int, bits: int) -> "Interval":
        """Enclosure of the principal ``n``-th root (clamps tiny negatives)."""
        if self.hi < 0:
            raise ValueError("root of a negative interval")
        return Interval(_root_bound(max(self.lo, Fraction(0)), n, bits, False),
                        _root_bound(self.hi, n, bits, True))

    def width(self) -> Fraction:
        return self.hi - self.lo

    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2


def _root_bound(x: Fraction, n: int, bits: int, up: bool) -> Fraction:
    if x == 0:
        return x
    # choose k so that x**(1/n) * 2**k carries about `bits` bits
    mag = (x.numerator.bit_length() - x.denominator.bit_length()) // n
    k = max(0, bits - mag)
    scaled = x * (1 << (n * k))
    if up:
        top = -((-scaled.numerator) // scaled.denominator)
        r, exact = gmpy2.iroot(gmpy2.mpz(top), n)
        r = int(r) + (0 if exact else 1)
    else:
        r = int(gmpy2.iroot(gmpy2.mpz(scaled.numerator // scaled.denominator), n)[0])
    return Fraction(r, 1 << k)


class CReal:
    """A real number that can be enclosed to any precision.

    A ``CReal`` is either exact (holding a Fraction) or a lazy node whose
    ``enclose(bits)`` returns an ``Interval`` guaranteed to contain the
    value.  Arithmetic with exact operands stays exact.
    """

    __slots__ = ("_exact", "_fn", "_cache", "_sq")

    def __init__(self, exact: Fraction | None = None,
                 fn: Callable[[int], Interval] | None = None):
        if (exact is None) == (fn is None):
            raise ValueError("give exactly one of exact or fn")
        self._exact = exact
        self._fn = fn
        self._cache: dict[int, Interval] = {}
        # rational square of an irrational square root, when known
        self._sq: Fraction | None = None

    # construction -------------------------------------------------------
    @staticmethod
    def of(x: Number | str | float) -> "CReal":
        if isinstance(x, CReal):
            return x
        if isinstance(x, (int, Fraction)):
            return CReal(exact=Fraction(x))
        return CReal(exact=parse_rational(x))

    @property
    def is_exact(self) -> bool:
        return self._exact is not None

    @property
    def exact(self) -> Fraction:
        if self._exact is None:
            raise ValueError("value is not known to be rational")
        return self._exact

    def enclose(self, bits: int) -> Interval:
        if self._exact is not None:
            return Interval.point(self._exact)
        iv = self._cache.get(bits)
        if iv is None:
            iv = self._fn(bits)  # type: ignore[misc]
            self._cache[bits] = iv
        return iv

    # arithmetic ---------------------------------------------------------
    def _binary(self, other: Number, exact_op, iv_op, guard: int = 8) -> "CReal":
        o = CReal.of(other)
        if self._exact is not None and o._exact is not None:
            return CReal(exact=exact_op(self._exact, o._exact))
        a, b = self, o
        return CReal(fn=lambda bits: iv_op(a.enclose(bits + guard),
                                           b.enclose(bits + guard)).rounded(bits + guard))

    def __add__(self, o: Number) -> "CReal":
        return self._binary(o, lambda x, y: x + y, lambda x, y: x + y)

    __radd__ = __add__

    def __sub__(self, o: Number) -> "CReal":
        return self._binary(o, lambda x, y: x - y, lambda x, y: x - y)

    def __rsub__(self, o: Number) -> "CReal":
        return CReal.of(o) - self

    def __mul__(self, o: Number) -> "CReal":
        if o is self and self._sq is not None:
            return CReal(exact=self._sq)
        return self._binary(o, lambda x, y: x * y, lambda x, y: x * y)

    __rmul__ = __mul__

    def __truediv__(self, o: Number) -> "CReal":
        o = CReal.of(o)
        if o._exact is not None and o._exact == 0:
            raise ZeroDivisionError("division by zero")
        return self._binary(o, lambda x, y: x / y, _div_refining(o))

    def __rtruediv__(self, o: Number) -> "CReal":
        return CReal.of(o) / self

    def __neg__(self) -> "CReal":
        if self._exact is not None:
            return CReal(exact=-self._exact)
        a = self
        return CReal(fn=lambda bits: -a.enclose(bits))

    def __abs__(self) -> "CReal":
        if self._exact is not None:
            return CReal(exact=abs(self._exact))
        a = self
        return CReal(fn=lambda bits: a.enclose(bits).absolute())

    def __pow__(self, k: int) -> "CReal":
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        if self._exact is not None:
            return CReal(exact=self._exact ** k)
        if self._sq is not None and k % 2 == 0:
            return CReal(exact=self._sq ** (k // 2))
        a = self

        def fn(bits: int) -> Interval:
            iv = a.enclose(bits + 8 + k.bit_length())
            out = Interval.point(Fraction(1))
            for _ in range(k):
                out = out * iv
            if k % 2 == 0 and out.lo < 0:
                out = Interval(Fraction(0), out.hi)
            return out.rounded(bits + 8)

        return CReal(fn=fn)

    def root(self, n: int) -> "CReal":
        """Principal ``n``-th root of a non-negative value."""
        if n == 1:
            return self
        if self._exact is not None:
            x = self._exact
            if x < 0:
                raise ValueError("root of a negative number")
            rn, en = gmpy2.iroot(gmpy2.mpz(x.numerator), n)
            rd, ed = gmpy2.iroot(gmpy2.mpz(x.denominator), n)
            if en and ed:
                return CReal(exact=Fraction(int(rn), int(rd)))
        a = self
        out = CReal(fn=lambda bits: a.enclose(bits + 8).root(n, bits + 8))
        if n == 2 and self._exact is not None:
            out._sq = self._exact
        return out

    def sqrt(self) -> "CReal":
        return self.root(2)

    def rpow(self, p: Fraction) -> "CReal":
        """``self ** p`` for rational ``p >= 0`` and non-negative ``self``."""
        p = Fraction(p)
        if p < 0:
            raise ValueError("negative exponents are not supported")
        return (self ** p.numerator).root(p.denominator)

    # queries ------------------------------------------------------------
    def sign(self, cap: int | None = None) -> int | None:
        """Certified sign, or ``None`` if undecided at the precision cap."""
        if self._exact is not None:
            return (self._exact > 0) - (self._exact < 0)
        cap = _max_bits if cap is None else cap
        bits = _START_BITS
        while bits <= cap:
            iv = self.enclose(bits)
            if iv.lo > 0:
                return 1
            if iv.hi < 0:
                return -1
            if iv.lo == iv.hi == 0:
                return 0
            bits *= 2
        return None

    def cmp(self, other: Number) -> int:
        """Certified comparison; raises PrecisionError when undecided."""
        s = (self - other).sign()
        if s is None:
            raise PrecisionError("comparison undecided at the precision cap")
        return s

    def __lt__(self, o: Number) -> bool:
        return self.cmp(o) < 0

    def __le__(self, o: Number) -> bool:
        return self.cmp(o) <= 0

    def __gt__(self, o: Number) -> bool:
        return self.cmp(o) > 0

    def __ge__(self, o: Number) -> bool:
        return self.cmp(o) >= 0

    def __eq__(self, o: object) -> bool:  # exact-only equality
        if isinstance(o, (int, Fraction, CReal)):
            oc = CReal.of(o)
            if self._exact is not None and oc._exact is not None:
                return self._exact == oc._exact
            return (self - oc).sign() == 0
        return NotImplemented

    __hash__ = None  # type: ignore[assignment]

    def __float__(self) -> float:
        if self._exact is not None:
            return float(self._exact)
        return float(self.enclose(64).midpoint())

    def approx(self, bits: int = 128) -> Fraction:
        """Midpoint of an enclosure, as a rational approximation."""
        return self.enclose(bits).midpoint()

    def lower(self, bits: int = 128) -> Fraction:
        return self.enclose(bits).lo

    def upper(self, bits: int = 128) -> Fraction:
        return self.enclose(bits).hi

    def __repr__(self) -> str:
        if self._exact is not None:
            return f"CReal({self._exact})"
        return f"CReal(~{float(self):.17g})"


def _div_refining(den: CReal):
    def op(x: Interval, y: Interval) -> Interval:
        if y.contains_zero():
            # the caller asked for too little precision; refine the divisor
            bits = 128
            while y.contains_zero():
                if bits > 1 << 16:
                    raise PrecisionError("divisor enclosure does not exclude zero")
                y = den.enclose(bits)
                bits *= 2
        return x / y
    return op


def floor_of(x: Number) -> int:
    """Certified floor; raises PrecisionError if ``x`` is too close to an integer."""
    x = CReal.of(x)
    if x.is_exact:
        return math.floor(x.exact)
    bits = _START_BITS
    while bits <= _max_bits:
        iv = x.enclose(bits)
        lo, hi = math.floor(iv.lo), math.floor(iv.hi)
        if lo == hi:
            return lo
        bits *= 2
    raise PrecisionError("floor undecided at the precision cap")


def ceil_of(x: Number) -> int:
    return -floor_of(-CReal.of(x))


def to_decimal(x: Fraction, digits: int = 30) -> str:
    """Decimal string of a rational, rounded to ``digits`` significant digits."""
    if x == 0:
        return "0"
    sign = "-" if x < 0 else ""
    x = abs(x)
    exp = len(str(x.numerator)) - len(str(x.denominator))
    scale = digits - exp
    m = round(x * Fraction(10) ** scale) if scale >= 0 else round(x / Fraction(10) ** (-scale))
    s = str(m)
    point = len(s) - scale
    if point <= 0:
        return f"{sign}0.{'0' * (-point)}{s}".rstrip("0").rstrip(".")
    if point >= len(s):
        return sign + s + "0" * (point - len(s))
    return f"{sign}{s[:point]}.{s[point:]}".rstrip("0").rstrip(".")


def rational_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
