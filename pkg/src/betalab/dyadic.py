"""Exact dyadic numbers, certified enclosures and monotone root isolation.

Every base and point handled by the package is a dyadic ``m * 2**e``.  Dyadics
form a ring, so orbit values, ``f_w`` values and floors are exact and every
sign test in a bisection is decided without rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Context, Decimal, InvalidOperation
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from betalab.errors import NoSignChange, ParseError, ToleranceUnreachable

Number = Union["Dyadic", int]

DEFAULT_BITS = 64
MAX_BITS = 4096


class Dyadic:
    """The exact number ``mantissa * 2**exponent`` in canonical form."""

    __slots__ = ("m", "e")

    def __init__(self, mantissa: int = 0, exponent: int = 0):
        mantissa = int(mantissa)
        exponent = int(exponent)
        if mantissa == 0:
            exponent = 0
        else:
            tz = (mantissa & -mantissa).bit_length() - 1
            if tz:
                mantissa >>= tz
                exponent += tz
        self.m = mantissa
        self.e = exponent

    # construction ------------------------------------------------------
    @classmethod
    def coerce(cls, value) -> "Dyadic":
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, int):
            return cls(value, 0)
        if isinstance(value, Fraction):
            d = value.denominator
            if d & (d - 1):
                raise ValueError(f"{value} is not dyadic")
            return cls(value.numerator, -(d.bit_length() - 1))
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError("non-finite float")
            return cls.coerce(Fraction(value))
        raise TypeError(f"cannot coerce {type(value).__name__} to Dyadic")

    @classmethod
    def from_fraction_floor(cls, q: Fraction, bits: int) -> "Dyadic":
        return cls(math.floor(q * (1 << bits)), -bits)

    @classmethod
    def from_fraction_ceil(cls, q: Fraction, bits: int) -> "Dyadic":
        return cls(math.ceil(q * (1 << bits)), -bits)

    # arithmetic --------------------------------------------------------
    def _align(self, other: "Dyadic"):
        if self.e <= other.e:
            return self.m, other.m << (other.e - self.e), self.e
        return self.m << (self.e - other.e), other.m, other.e

    def __add__(self, other):
        try:
            other = Dyadic.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, e = self._align(other)
        return Dyadic(a + b, e)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            other = Dyadic.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, e = self._align(other)
        return Dyadic(a - b, e)

    def __rsub__(self, other):
        return Dyadic.coerce(other) - self

    def __mul__(self, other):
        try:
            other = Dyadic.coerce(other)
        except TypeError:
            return NotImplemented
        return Dyadic(self.m * other.m, self.e + other.e)

    __rmul__ = __mul__

    def __neg__(self):
        return Dyadic(-self.m, self.e)

    def __pos__(self):
        return self

    def __abs__(self):
        return Dyadic(abs(self.m), self.e)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        return Dyadic(self.m**k, self.e * k)

    def ldexp(self, k: int) -> "Dyadic":
        return Dyadic(self.m, self.e + k)

    def half(self) -> "Dyadic":
        return Dyadic(self.m, self.e - 1)

    def __floor__(self) -> int:
        if self.e >= 0:
            return self.m << self.e
        return self.m >> -self.e

    def __ceil__(self) -> int:
        return -math.floor(-self)

    def floor(self) -> int:
        return math.floor(self)

    def frac(self) -> "Dyadic":
        return self - math.floor(self)

    # comparison --------------------------------------------------------
    def sign(self) -> int:
        return (self.m > 0) - (self.m < 0)

    def _cmp(self, other) -> int:
        if isinstance(other, Fraction) and not _is_dyadic_fraction(other):
            q = self.to_fraction()
            return (q > other) - (q < other)
        other = Dyadic.coerce(other)
        a, b, _ = self._align(other)
        return (a > b) - (a < b)

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except (TypeError, ValueError):
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash(self.to_fraction())

    def __bool__(self):
        return self.m != 0

    # conversion --------------------------------------------------------
    def to_fraction(self) -> Fraction:
        if self.e >= 0:
            return Fraction(self.m << self.e)
        return Fraction(self.m, 1 << -self.e)

    def __float__(self):
        return math.ldexp(float(self.m), self.e) if abs(self.m) < (1 << 1000) else float(self.to_fraction())

    def scaled(self, bits: int) -> int:
        """``self * 2**bits`` as an integer; the value must lie on that grid."""
        shift = self.e + bits
        if shift < 0:
            raise ValueError(f"{self} has more than {bits} fractional bits")
        return self.m << shift

    def decimal(self, digits: int = 30) -> str:
        return fraction_to_decimal(self.to_fraction(), digits)

    def to_json(self) -> dict:
        return {"m": str(self.m), "e": self.e, "dec": self.decimal()}

    @classmethod
    def from_json(cls, obj) -> "Dyadic":
        return cls(int(obj["m"]), int(obj["e"]))

    def __repr__(self):
        return f"Dyadic({self.m}, {self.e})"

    def __str__(self):
        return self.decimal()


def _is_dyadic_fraction(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


def fraction_to_decimal(q: Fraction, digits: int = 30) -> str:
    """Decimal string with ``digits`` significant digits (round half even)."""
    ctx = Context(prec=digits)
    value = ctx.divide(Decimal(q.numerator), Decimal(q.denominator))
    text = format(value, "f") if -30 < value.adjusted() < 30 else format(value, "e")
    return text


ZERO = Dyadic(0)
ONE = Dyadic(1)


def to_dyadic(text: Union[str, int, Dyadic], bits: int = DEFAULT_BITS) -> Dyadic:
    """Round a finite decimal string to the nearest dyadic with exponent >= -bits.

    The result is treated as the exact input from then on.  Exactly
    representable decimals such as ``"1.5"`` are returned unchanged.
    """
    if isinstance(text, Dyadic):
        return text
    if isinstance(text, int):
        return Dyadic(text)
    if bits < 1:
        raise ValueError("bits must be positive")
    try:
        d = Decimal(str(text).strip())
    except InvalidOperation:
        raise ParseError(f"not a decimal number: {text!r}") from None
    if not d.is_finite():
        raise ParseError(f"not a finite decimal: {text!r}")
    q = Fraction(d)
    # round half to even on the 2**-bits grid
    return Dyadic(round(q * (1 << bits)), -bits)


@dataclass(frozen=True)
class Enclosure:
    """A certified interval ``[lo, hi]`` of dyadics."""

    lo: Dyadic
    hi: Dyadic

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    @classmethod
    def exact(cls, value) -> "Enclosure":
        v = Dyadic.coerce(value)
        return cls(v, v)

    def width(self) -> Dyadic:
        return self.hi - self.lo

    def midpoint(self) -> Dyadic:
        return (self.lo + self.hi).half()

    def contains(self, value) -> bool:
        return self.lo <= value <= self.hi

    def is_exact(self) -> bool:
        return self.lo == self.hi

    def __float__(self):
        return float(self.midpoint())

    def to_json(self) -> dict:
        return {"lo": self.lo.to_json(), "hi": self.hi.to_json()}

    @classmethod
    def from_json(cls, obj) -> "Enclosure":
        return cls(Dyadic.from_json(obj["lo"]), Dyadic.from_json(obj["hi"]))


@dataclass(frozen=True)
class Tolerance:
    bits: int = DEFAULT_BITS
    max_bits: int = MAX_BITS

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("tolerance bits must be positive")
        if self.bits > self.max_bits:
            raise ToleranceUnreachable(f"{self.bits} bits exceeds ceiling {self.max_bits}")

    @property
    def eps(self) -> Dyadic:
        return Dyadic(1, -self.bits)

    def escalate(self) -> "Tolerance":
        if self.bits >= self.max_bits:
            raise ToleranceUnreachable(f"precision ceiling of {self.max_bits} bits reached")
        return Tolerance(min(2 * self.bits, self.max_bits), self.max_bits)


def eval_fw(w: Sequence[int], x: Dyadic, beta: Dyadic) -> Dyadic:
    """Exact ``beta**n * x - sum(w_i * beta**(n-i))`` by Horner's rule."""
    x = Dyadic.coerce(x)
    beta = Dyadic.coerce(beta)
    acc, e = x.m, x.e
    bm, be = beta.m, beta.e
    for d in w:
        acc *= bm
        e += be
        if e > 0:
            acc <<= e
            e = 0
        if d:
            acc -= d << -e
    return Dyadic(acc, e)


def fw_fraction(w: Sequence[int], x, beta) -> Fraction:
    """Rational ``f_w`` for non-dyadic arguments (used for fixed-base geometry)."""
    acc = Fraction(x)
    beta = Fraction(beta)
    for d in w:
        acc = acc * beta - d
    return acc


def solve_monotone_root(
    fn: Callable[[Dyadic], object],
    lo,
    hi,
    tol: Optional[Tolerance] = None,
    *,
    target=None,
) -> Enclosure:
    """Bisect a monotone crossing on ``[lo, hi]`` down to width ``2**-tol.bits``.

    With ``target=None`` ``fn`` is a predicate that is true on the left part
    of the bracket and false on the right; the result ``[a, b]`` has
    ``fn(a)`` true and ``fn(b)`` false.  Otherwise ``fn`` is a strictly
    monotone function and the result encloses the unique solution of
    ``fn(beta) == target``; an exact hit collapses the enclosure to a point.
    """
    tol = tol or Tolerance()
    lo, hi = Dyadic.coerce(lo), Dyadic.coerce(hi)
    if not lo < hi:
        raise ValueError("solve_monotone_root needs lo < hi")
    eps = tol.eps

    if target is None:
        if not fn(lo) or fn(hi):
            raise NoSignChange("predicate is not true-then-false across the bracket")
        while hi - lo > eps:
            mid = (lo + hi).half()
            if fn(mid):
                lo = mid
            else:
                hi = mid
        return Enclosure(lo, hi)

    t = Dyadic.coerce(target)

    def side(b):
        return (fn(b) - t).sign()

    s_lo, s_hi = side(lo), side(hi)
    if s_lo == 0:
        return Enclosure.exact(lo)
    if s_hi == 0:
        return Enclosure.exact(hi)
    if s_lo == s_hi:
        raise NoSignChange(f"no sign change of f - {t} on [{lo}, {hi}]")
    while hi - lo > eps:
        mid = (lo + hi).half()
        s = side(mid)
        if s == 0:
            return Enclosure.exact(mid)
        if s == s_lo:
            lo = mid
        else:
            hi = mid
    return Enclosure(lo, hi)
