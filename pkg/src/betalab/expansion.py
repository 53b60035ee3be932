"""The beta-transformation and greedy beta-expansions.

All functions here are exact over dyadic inputs.  :class:`CappedOrbit` is the
fixed-point variant used by the Monte Carlo scans, where exact mantissas would
grow by the bit length of ``beta`` at every step.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

from betalab.dyadic import Dyadic
from betalab.errors import AmbiguousDigit
from betalab.words import DigitStream, Word

DEFAULT_CAP_BITS = 256


def _check_beta(beta: Dyadic):
    if not beta > 1:
        raise ValueError(f"base must exceed 1, got {beta}")


def beta_transform(x, beta) -> Dyadic:
    """``T_beta(x) = beta*x - floor(beta*x)`` for ``x`` in ``[0, 1]``."""
    x, beta = Dyadic.coerce(x), Dyadic.coerce(beta)
    _check_beta(beta)
    if not 0 <= x <= 1:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    y = beta * x
    return y - math.floor(y)


@dataclass(frozen=True)
class OrbitState:
    point: Dyadic
    step: int
    digits_emitted: Word = field(default_factory=Word)


@dataclass(frozen=True)
class Expansion:
    digits: Word
    remainder: Dyadic

    def to_json(self) -> dict:
        return {"digits": str(self.digits), "remainder": self.remainder.to_json()}


def _orbit_ints(x: Dyadic, beta: Dyadic, n: int, stop_at_zero: bool = False):
    """Yield ``(digit, X, e)`` with ``T^k x = X * 2**e`` for k = 1..n."""
    X, e = x.m, x.e
    B, eb = beta.m, beta.e
    for _ in range(n):
        X *= B
        e += eb
        if e >= 0:
            d, X, e = X << e, 0, 0
        else:
            d = X >> -e
            X -= d << -e
        yield d, X, e
        if stop_at_zero and X == 0:
            return


def expand(x, beta, n: int) -> Expansion:
    """First ``n`` greedy digits of ``x`` in base ``beta`` and the exact ``T^n x``."""
    x, beta = Dyadic.coerce(x), Dyadic.coerce(beta)
    _check_beta(beta)
    if not 0 <= x <= 1:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    digits = []
    X, e = x.m, x.e
    for d, X, e in _orbit_ints(x, beta, n):
        digits.append(d)
    return Expansion(Word._raw(tuple(digits)), Dyadic(X, e))


def expand_digits(x, beta, n: int) -> Word:
    return expand(x, beta, n).digits


def orbit(x, beta, n: int) -> Iterator[OrbitState]:
    """Successive states ``(T^k x, k, digits so far)`` for k = 0..n."""
    x, beta = Dyadic.coerce(x), Dyadic.coerce(beta)
    _check_beta(beta)
    digits: list = []
    yield OrbitState(x, 0, Word())
    for k, (d, X, e) in enumerate(_orbit_ints(x, beta, n), start=1):
        digits.append(d)
        yield OrbitState(Dyadic(X, e), k, Word._raw(tuple(digits)))


@functools.lru_cache(maxsize=4096)
def _expansion_of_one(beta: Dyadic, n: int):
    """Digits of ``eps(beta)`` up to ``n`` and whether the orbit of 1 hit 0."""
    digits = []
    for d, X, _ in _orbit_ints(Dyadic(1), beta, n, stop_at_zero=True):
        digits.append(d)
        if X == 0:
            return tuple(digits), True
    return tuple(digits), False


def expansion_of_one(beta, horizon: int) -> DigitStream:
    """``eps(beta)`` as a stream: complete when finite, truncated otherwise."""
    beta = Dyadic.coerce(beta)
    _check_beta(beta)
    digits, finite = _expansion_of_one(beta, horizon)
    if finite:
        return DigitStream(Word._raw(digits), Word(), horizon)
    return DigitStream(Word._raw(digits), None, horizon)


def star_stream(beta, horizon: int) -> DigitStream:
    """The infinite expansion of 1: the periodic rewrite when the greedy one terminates.

    A finite expansion ``e_1 ... e_k 0^inf`` (``e_k`` the last nonzero digit)
    becomes ``(e_1 ... e_{k-1} (e_k - 1))^inf``.  Finiteness is decided by
    exact equality of the orbit with 0 within ``horizon`` steps.
    """
    beta = Dyadic.coerce(beta)
    _check_beta(beta)
    digits, finite = _expansion_of_one(beta, horizon)
    if not finite:
        return DigitStream(Word._raw(digits), None, horizon)
    k = max(i for i, d in enumerate(digits) if d)
    block = digits[:k] + (digits[k] - 1,)
    return DigitStream(Word(), Word._raw(block), horizon)


def star_expansion_of_one(beta, n: int) -> Word:
    """First ``n`` digits of the infinite expansion of 1."""
    return star_stream(beta, max(n, 1)).take(n)


def reconstruct(digits, remainder, beta):
    """``sum d_i beta^-i + remainder * beta^-n`` as an exact fraction."""
    from fractions import Fraction

    b = Dyadic.coerce(beta).to_fraction()
    total = Fraction(0)
    for i, d in enumerate(digits, start=1):
        total += d / b**i
    return total + Dyadic.coerce(remainder).to_fraction() / b ** len(digits)


class CappedOrbit:
    """Fixed-point pseudo-orbit of ``T_beta`` with ``bits`` fractional bits.

    Each step multiplies the stored point exactly by ``beta``, takes the exact
    floor, and rounds the remainder to the nearest multiple of ``2**-bits``.
    The sequence is therefore a pseudo-orbit with one-step error at most
    ``2**-(bits+1)``.  A step whose exact image lies within ``beta*2**-(bits+1)``
    of an integer raises :class:`AmbiguousDigit`, since the digit is then not
    stable under the rounding of the previous step.  Integer bases never
    round, so they never raise.

    ``beta`` must be a dyadic with at most ``bits`` fractional bits and ``x``
    must lie on the ``2**-bits`` grid.
    """

    def __init__(self, x, beta, bits: int = DEFAULT_CAP_BITS):
        x, beta = Dyadic.coerce(x), Dyadic.coerce(beta)
        _check_beta(beta)
        self.bits = bits
        self.k = max(0, -beta.e)
        self.B = beta.scaled(self.k)
        self.X = x.scaled(bits)
        self.step = 0

    @property
    def point(self) -> Dyadic:
        return Dyadic(self.X, -self.bits)

    def advance(self) -> int:
        shift = self.bits + self.k
        prod = self.B * self.X
        d = prod >> shift
        r = prod - (d << shift)
        if self.k and (2 * r < self.B or 2 * ((1 << shift) - r) < self.B):
            raise AmbiguousDigit(f"digit boundary straddled at step {self.step + 1}")
        self.X = (r + (1 << (self.k - 1))) >> self.k if self.k else r
        self.step += 1
        return d

    def __iter__(self):
        return self

    def __next__(self) -> int:
        return self.advance()
