"""Admissible words, cylinders and full cylinders for a fixed base.

Cylinder geometry is exact but rational: ``1/beta`` is not dyadic unless
``beta`` is a power of two, so left endpoints and lengths are kept as
:class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import mpmath

from betalab.dyadic import Dyadic, fraction_to_decimal
from betalab.errors import CapExceeded, DepthExhausted, HypothesisViolated
from betalab.expansion import expansion_of_one, star_stream
from betalab.words import Ordering, Word, lex_compare

GUARD_DIGITS = 32
DEFAULT_CAP = 10**7
MAX_DEPTH = 1 << 14


def fraction_json(q: Fraction) -> dict:
    return {"num": str(q.numerator), "den": str(q.denominator), "dec": fraction_to_decimal(q)}


@dataclass(frozen=True)
class ShiftCylinder:
    word: Word
    left: Fraction
    length: Fraction
    is_full: bool

    @property
    def right(self) -> Fraction:
        return self.left + self.length

    def to_json(self) -> dict:
        return {
            "w": str(self.word),
            "left": fraction_json(self.left),
            "len": fraction_json(self.length),
            "full": self.is_full,
        }


@dataclass(frozen=True)
class CountReport:
    n: int
    sigma_count: int
    xi_count: int
    lower_bound: Fraction
    upper_bound: Fraction

    @property
    def bounds_hold(self) -> bool:
        return self.lower_bound <= self.sigma_count <= self.upper_bound

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "sigma_count": self.sigma_count,
            "xi_count": self.xi_count,
            "lower_bound": fraction_to_decimal(self.lower_bound),
            "upper_bound": fraction_to_decimal(self.upper_bound),
            "bounds_hold": self.bounds_hold,
        }


def count_bounds(beta: Dyadic, n: int) -> Tuple[Fraction, Fraction]:
    b = Dyadic.coerce(beta).to_fraction()
    return b**n, b ** (n + 1) / (b - 1)


def is_admissible(w: Sequence[int], beta, depth: Optional[int] = None) -> bool:
    """Parry's test: every suffix ``w[i:] 0^inf`` precedes the infinite expansion of 1.

    Shifts ``i >= len(w)`` give ``0^inf``, which always precedes that expansion since
    its first digit is at least 1, so only ``i < len(w)`` are compared.
    """
    w = Word(w)
    beta = Dyadic.coerce(beta)
    if depth is None:
        depth = len(w) + GUARD_DIGITS
    star = star_stream(beta, depth)
    for i in range(len(w)):
        if lex_compare(w[i:], star, depth) is not Ordering.LESS:
            return False
    return True


def _admissible_escalating(w: Word, beta: Dyadic, depth: int) -> bool:
    while True:
        try:
            return is_admissible(w, beta, depth)
        except DepthExhausted:
            if depth >= MAX_DEPTH:
                raise
            depth *= 2


def is_full_word(w: Sequence[int], beta, depth: Optional[int] = None) -> bool:
    """Full-cylinder criterion against the greedy expansion of 1 (not its periodic rewrite).

    ``w`` is full iff every suffix of ``w_1..w_{n-1}(w_n + 1)`` is at most
    ``eps_1..eps_{n-i}(beta)`` for every ``0 <= i < n``.  Both sides have equal
    length so the comparison is plain tuple order.
    """
    w = Word(w)
    n = len(w)
    if n == 0:
        return True
    beta = Dyadic.coerce(beta)
    depth = max(depth or n, n)
    one = expansion_of_one(beta, depth)
    eps = tuple(one.digit(i) for i in range(1, n + 1))
    plus = tuple(w.increment_last())
    return all(plus[i:] <= eps[: n - i] for i in range(n))


def _max_digit(beta: Dyadic) -> int:
    return math.floor(beta)


def enumerate_sigma(beta, n: int, cap: int = DEFAULT_CAP) -> Tuple[List[ShiftCylinder], CountReport]:
    """All admissible words of length ``n`` in lexicographic order, with their intervals.

    Depth-first search with pruning: a prefix that fails Parry's test has no
    admissible extension.  Right endpoints are the next cylinder's left
    endpoint (1 for the last), so fullness is read off the partition.
    """
    beta = Dyadic.coerce(beta)
    if n < 1:
        raise ValueError("n must be positive")
    b = beta.to_fraction()
    top = _max_digit(beta)
    depth = n + GUARD_DIGITS
    inv = [b**-i for i in range(n + 1)]

    words: List[Word] = []
    lefts: List[Fraction] = []
    stack = [(Word(), Fraction(0))]
    while stack:
        u, left = stack.pop()
        if len(u) == n:
            words.append(u)
            lefts.append(left)
            if len(words) > cap:
                raise CapExceeded(f"more than {cap} admissible words of length {n}")
            continue
        children = []
        for k in range(top + 1):
            child = u + (k,)
            if not _admissible_escalating(child, beta, depth):
                # digits are tried in increasing order and a larger digit
                # only makes every comparison worse
                break
            children.append((child, left + k * inv[len(child)]))
        stack.extend(reversed(children))

    full_len = inv[n]
    cylinders = []
    for j, (w, left) in enumerate(zip(words, lefts)):
        right = lefts[j + 1] if j + 1 < len(lefts) else Fraction(1)
        length = right - left
        cylinders.append(ShiftCylinder(w, left, length, length == full_len))
    lo, hi = count_bounds(beta, n)
    xi = sum(c.is_full for c in cylinders)
    return cylinders, CountReport(n, len(cylinders), xi, lo, hi)


def enumerate_xi(beta, n: int, cap: int = DEFAULT_CAP) -> Tuple[List[ShiftCylinder], CountReport]:
    cylinders, report = enumerate_sigma(beta, n, cap)
    return [c for c in cylinders if c.is_full], report


def successor(w: Sequence[int], beta) -> Optional[Word]:
    """Lexicographically next admissible word of the same length, or None for the last one."""
    w = Word(w)
    beta = Dyadic.coerce(beta)
    n = len(w)
    for j in range(n - 1, -1, -1):
        cand = w[:j] + (w[j] + 1,)
        if cand[-1] > _max_digit(beta):
            continue
        if _admissible_escalating(cand, beta, n + GUARD_DIGITS):
            return cand + Word((0,) * (n - j - 1))
    return None


def shift_cylinder(w: Sequence[int], beta) -> ShiftCylinder:
    """The cylinder of a single admissible word without enumerating its order."""
    w = Word(w)
    beta = Dyadic.coerce(beta)
    if not _admissible_escalating(w, beta, len(w) + GUARD_DIGITS):
        raise ValueError(f"{w} is not admissible in base {beta}")
    b = beta.to_fraction()
    left = sum((Fraction(d) / b**i for i, d in enumerate(w, start=1)), Fraction(0))
    nxt = successor(w, beta)
    if nxt is None:
        right = Fraction(1)
    else:
        right = sum((Fraction(d) / b**i for i, d in enumerate(nxt, start=1)), Fraction(0))
    length = right - left
    return ShiftCylinder(w, left, length, length == b ** -len(w))


# ---------------------------------------------------------------------------
# proportion of full cylinders


@dataclass(frozen=True)
class PremiseCheck:
    lhs: Tuple[float, float]
    rhs: Tuple[float, float]
    holds: bool
    below_inverse_beta: bool
    n_min: int

    @property
    def ok(self) -> bool:
        return self.holds and self.below_inverse_beta

    def to_json(self) -> dict:
        return {
            "lhs": list(self.lhs),
            "rhs": list(self.rhs),
            "holds": self.holds,
            "lambda_below_inverse_beta": self.below_inverse_beta,
            "n_min": self.n_min,
        }


def check_premise(beta, lam, prec: int = 128) -> PremiseCheck:
    """Certified test of ``lam - lam*ln(lam) < (beta-1)^2/beta^3`` and ``lam < 1/beta``.

    Interval arithmetic with outward rounding; the strict inequality holds only
    if the upper end of the left side lies below the lower end of the right.
    Also returns the smallest integer ``n >= -log_beta(lam)``.
    """
    beta = Dyadic.coerce(beta)
    lam = Dyadic.coerce(lam)
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    iv = mpmath.iv
    saved = iv.prec
    iv.prec = prec
    try:
        bq, lq = beta.to_fraction(), lam.to_fraction()
        b = iv.mpf(bq.numerator) / bq.denominator
        l = iv.mpf(lq.numerator) / lq.denominator
        lhs = l - l * iv.log(l)
        rhs = (b - 1) ** 2 / b**3
        holds = bool(lhs.b < rhs.a)
        nmin_iv = -iv.log(l) / iv.log(b)
        n_min = int(mpmath.ceil(nmin_iv.b))
        lhs_t = (float(lhs.a), float(lhs.b))
        rhs_t = (float(rhs.a), float(rhs.b))
    finally:
        iv.prec = saved
    return PremiseCheck(lhs_t, rhs_t, holds, lam * beta < 1, max(n_min, 1))


@dataclass(frozen=True)
class ProportionRow:
    n: int
    xi_count: int
    sigma_count: int
    applicable: bool
    holds: bool

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.xi_count, self.sigma_count)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "xi": self.xi_count,
            "sigma": self.sigma_count,
            "ratio": float(self.ratio),
            "applicable": self.applicable,
            "holds": self.holds,
        }


@dataclass
class ProportionReport:
    beta: Dyadic
    lam: Dyadic
    premise: PremiseCheck
    rows: List[ProportionRow] = field(default_factory=list)

    @property
    def informational(self) -> bool:
        return not self.premise.ok

    @property
    def all_hold(self) -> bool:
        return all(r.holds for r in self.rows if r.applicable)


def full_proportion_report(beta, lam, n_range: Iterable[int], strict: bool = True, cap: int = DEFAULT_CAP) -> ProportionReport:
    """Whether full words make up at least ``lam`` of the admissible words, for each ``n`` in ``n_range``.

    Raises :class:`HypothesisViolated` when the premise on ``lam`` fails and
    ``strict`` is set; otherwise the rows are computed and flagged as
    informational.  Rows below ``-log_beta(lam)`` are reported but not asserted.
    """
    beta = Dyadic.coerce(beta)
    lam = Dyadic.coerce(lam)
    premise = check_premise(beta, lam)
    if strict and not premise.ok:
        raise HypothesisViolated(
            f"lambda={lam} fails the premise: lhs {premise.lhs} vs rhs {premise.rhs}, "
            f"lambda*beta<1 is {premise.below_inverse_beta}"
        )
    report = ProportionReport(beta, lam, premise)
    lq = lam.to_fraction()
    for n in n_range:
        cylinders, counts = enumerate_sigma(beta, n, cap)
        applicable = premise.ok and n >= premise.n_min
        holds = counts.xi_count >= lq * counts.sigma_count
        report.rows.append(ProportionRow(n, counts.xi_count, counts.sigma_count, applicable, holds))
    return report


def full_window_scan(beta, n: int, cap: int = DEFAULT_CAP, cylinders: Optional[List[ShiftCylinder]] = None) -> List[List[Word]]:
    """Every run of ``n + 1`` consecutive order-``n`` cylinders with no full one."""
    if cylinders is None:
        cylinders, _ = enumerate_sigma(beta, n, cap)
    return window_violations([c.is_full for c in cylinders], [c.word for c in cylinders], n + 1)


def window_violations(flags: Sequence[bool], words: Sequence[Word], size: int) -> List[List[Word]]:
    bad = []
    run = 0
    for j, f in enumerate(flags):
        run = 0 if f else run + 1
        if run >= size:
            bad.append(list(words[j - size + 1 : j + 1]))
    return bad
