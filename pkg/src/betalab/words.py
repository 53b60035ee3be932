"""Digit words, eventually periodic digit streams and lexicographic order.

Words compare as if padded with ``0^inf`` on the right, so ``"110"`` and
``"11"`` are equal and ``"10" < "11"``.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from betalab.errors import DepthExhausted, IndexOutOfRange, ParseError


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class Word(tuple):
    """Immutable finite digit string over the nonnegative integers."""

    __slots__ = ()

    def __new__(cls, digits: Union[str, Iterable[int]] = ()):
        if isinstance(digits, str):
            return parse_word(digits)
        digits = tuple(int(d) for d in digits)
        if any(d < 0 for d in digits):
            raise ValueError(f"negative digit in {digits!r}")
        return super().__new__(cls, digits)

    @classmethod
    def _raw(cls, digits):
        return super().__new__(cls, digits)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word._raw(tuple.__getitem__(self, item))
        return tuple.__getitem__(self, item)

    def __add__(self, other):
        return Word._raw(tuple.__add__(self, tuple(Word(other))))

    def __mul__(self, k):
        return Word._raw(tuple.__mul__(self, k))

    __rmul__ = __mul__

    def __str__(self):
        if all(d <= 9 for d in self):
            return "".join(map(str, self))
        return "[" + ",".join(map(str, self)) + "]"

    def __repr__(self):
        return f"Word({str(self)!r})"

    # sequence algebra --------------------------------------------------
    def shift(self, i: int = 1) -> "Word":
        if not 0 <= i <= len(self):
            raise IndexOutOfRange(f"shift {i} out of range for word of length {len(self)}")
        return self[i:]

    def concat(self, other) -> "Word":
        return self + other

    def power(self, k: int) -> "Word":
        if k < 0:
            raise IndexOutOfRange("negative power")
        return self * k

    def prefix(self, k: int) -> "Word":
        if not 0 <= k <= len(self):
            raise IndexOutOfRange(f"prefix {k} out of range for word of length {len(self)}")
        return self[:k]

    def increment_last(self) -> "Word":
        if not self:
            raise IndexOutOfRange("increment_last of the empty word")
        return Word._raw(tuple(self[:-1]) + (self[-1] + 1,))

    def digit(self, i: int) -> int:
        """1-based digit with zero padding beyond the end."""
        return self[i - 1] if i <= len(self) else 0

    def is_zero(self) -> bool:
        return not any(self)


_WORD_RE = re.compile(r"^\d*$")


def parse_word(text: str) -> Word:
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ParseError(f"unterminated word {text!r}")
        body = text[1:-1].strip()
        if not body:
            return Word._raw(())
        try:
            digits = tuple(int(t) for t in body.split(","))
        except ValueError:
            raise ParseError(f"bad word {text!r}") from None
        if any(d < 0 for d in digits):
            raise ParseError(f"negative digit in {text!r}")
        return Word._raw(digits)
    if not _WORD_RE.match(text):
        raise ParseError(f"bad word {text!r}")
    return Word._raw(tuple(int(c) for c in text))


@dataclass(frozen=True)
class DigitStream:
    """``preperiod`` followed by ``period`` repeated forever.

    An empty ``period`` means trailing zeros.  ``period=None`` marks a stream
    of which only the preperiod is known (a truncated infinite expansion);
    asking for a digit past it raises :class:`DepthExhausted`.
    """

    preperiod: Word
    period: Optional[Word] = Word()
    horizon: int = 1 << 16

    @property
    def complete(self) -> bool:
        return self.period is not None

    def digit(self, i: int) -> int:
        if i < 1:
            raise IndexOutOfRange("digits are 1-based")
        if i > self.horizon:
            raise DepthExhausted(f"digit {i} beyond stream horizon {self.horizon}")
        p = len(self.preperiod)
        if i <= p:
            return self.preperiod[i - 1]
        if self.period is None:
            raise DepthExhausted(f"digit {i} beyond the {p} known digits")
        if not self.period:
            return 0
        return self.period[(i - p - 1) % len(self.period)]

    def take(self, n: int) -> Word:
        return Word._raw(tuple(self.digit(i) for i in range(1, n + 1)))

    def __str__(self):
        pre = str(self.preperiod)
        if self.period is None:
            return pre + "..."
        return f"{pre}({self.period if self.period else '0'})"


def parse_stream(text: str, horizon: int = 1 << 16) -> DigitStream:
    """Parse ``"2(0)"``, ``"(10)"`` or a plain word (zero tail)."""
    text = text.strip()
    if text.endswith("..."):
        return DigitStream(parse_word(text[:-3]), None, horizon)
    m = re.match(r"^([^()]*)\(([^()]*)\)$", text)
    if not m:
        return DigitStream(parse_word(text), Word(), horizon)
    pre, per = parse_word(m.group(1)), parse_word(m.group(2))
    if per.is_zero():
        per = Word()
    return DigitStream(pre, per, horizon)


Sequenceish = Union[Word, DigitStream, str]


def _as_operand(a: Sequenceish):
    if isinstance(a, str):
        return parse_stream(a) if "(" in a or a.endswith("...") else parse_word(a)
    return a


def _digit(a, i: int) -> int:
    if isinstance(a, DigitStream):
        return a.digit(i)
    return a[i - 1] if i <= len(a) else 0


def _tail_shape(a):
    """(preperiod length, period length) of a fully known operand, else None."""
    if isinstance(a, DigitStream):
        if a.period is None:
            return None
        return len(a.preperiod), len(a.period) or 1
    return len(a), 1


def lex_compare(a: Sequenceish, b: Sequenceish, depth: int) -> Ordering:
    """Compare two zero-padded sequences lexicographically.

    The order is decided within ``depth`` digits.  :data:`Ordering.EQUAL` is
    returned only when the two sequences are provably identical; if they agree
    through ``depth`` but some digits beyond remain unresolved the comparison
    raises :class:`DepthExhausted`.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    a, b = _as_operand(a), _as_operand(b)
    for i in range(1, depth + 1):
        da, db = _digit(a, i), _digit(b, i)
        if da != db:
            return Ordering.LESS if da < db else Ordering.GREATER
    sa, sb = _tail_shape(a), _tail_shape(b)
    if sa is None or sb is None:
        raise DepthExhausted(f"operands agree through depth {depth}")
    # two eventually periodic sequences agreeing on pre + lcm(periods) digits
    # past the longer preperiod are identical
    limit = max(sa[0], sb[0]) + math.lcm(sa[1], sb[1])
    for i in range(depth + 1, limit + 1):
        if _digit(a, i) != _digit(b, i):
            raise DepthExhausted(f"operands agree through depth {depth} but differ at {i}")
    return Ordering.EQUAL


def shift(u: Word, i: int) -> Word:
    return Word(u).shift(i)


def concat(u, v) -> Word:
    return Word(u) + Word(v)


def power(u, k: int) -> Word:
    return Word(u).power(k)


def prefix(u, k: int) -> Word:
    return Word(u).prefix(k)


def increment_last(u) -> Word:
    return Word(u).increment_last()
