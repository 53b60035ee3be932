"""Cylinders in parameter space for a fixed point ``x``.

The cylinder of ``w`` is the set of bases whose expansion of ``x`` starts with ``w``.  It is
``[beta_lo(w), beta_hi(w))`` (open at 1 in the degenerate cases), and on it
``f_w(beta) = T^n_beta x`` is continuous and strictly increasing.  Endpoints
are certified by bisection with exact dyadic sign tests:

* ``beta_lo(w)`` solves ``f_w = 0``;
* ``beta_hi(w)`` is the sup of ``{beta : expansion prefix <= w}``, a monotone
  predicate since ``beta -> eps(x, beta)`` is strictly increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from betalab.dyadic import Dyadic, Enclosure, Tolerance, eval_fw, solve_monotone_root
from betalab.errors import CapExceeded, NotInOmega, ToleranceUnreachable
from betalab.expansion import expand_digits
from betalab.shift import _admissible_escalating, enumerate_sigma, window_violations
from betalab.words import Word

DEFAULT_PARAM_CAP = 10**6


@dataclass(frozen=True)
class ParamCylinder:
    word: Word
    lower: Enclosure
    upper: Enclosure
    lower_is_one: bool
    is_full: bool

    @property
    def order(self) -> int:
        return len(self.word)

    def length_bounds(self) -> Tuple[Dyadic, Dyadic]:
        """Certified ``(min, max)`` of the cylinder length; the min is clamped at 0."""
        lo = self.upper.lo - self.lower.hi
        return (lo if lo > 0 else Dyadic(0)), self.upper.hi - self.lower.lo

    def to_json(self) -> dict:
        return {
            "w": str(self.word),
            "lo": self.lower.to_json(),
            "hi": self.upper.to_json(),
            "full": self.is_full,
            "lower_is_one": self.lower_is_one,
        }


@dataclass(frozen=True)
class PhiSlice:
    word: Word
    target: Dyadic
    radius: Dyadic
    interval: Optional[Tuple[Enclosure, Enclosure]]

    @property
    def empty(self) -> bool:
        return self.interval is None

    def length_bounds(self) -> Tuple[Dyadic, Dyadic]:
        if self.interval is None:
            return Dyadic(0), Dyadic(0)
        a, b = self.interval
        lo = b.lo - a.hi
        return (lo if lo > 0 else Dyadic(0)), b.hi - a.lo

    def to_json(self) -> dict:
        lo, hi = self.length_bounds()
        return {
            "w": str(self.word),
            "interval": None if self.interval is None else [e.to_json() for e in self.interval],
            "empty": self.empty,
            "len": {"lo": lo.to_json(), "hi": hi.to_json()},
        }


def _x(x) -> Dyadic:
    x = Dyadic.coerce(x)
    if not 0 < x <= 1:
        raise ValueError(f"x must lie in (0, 1], got {x}")
    return x


def lower_is_one(w: Sequence[int], x) -> bool:
    """``beta_lo(w) = 1`` exactly for ``w = 0^n`` (x < 1) or ``w = 1 0^(n-1)`` (x = 1)."""
    w = Word(w)
    x = _x(x)
    if x < 1:
        return w.is_zero()
    return len(w) >= 1 and w[0] == 1 and w[1:].is_zero()


def _root_bracket_hi(w: Word, x: Dyadic) -> Dyadic:
    # sum w_i beta^-i <= max(w) / (beta - 1) < x once beta > 1 + max(w)/x;
    # a bracket [1, 1 + 2^k] bisects through every short dyadic exactly
    top = max(w) if w else 0
    span = 1 + math.ceil(Fraction(top) / x.to_fraction())
    return Dyadic(1) + Dyadic(1, (span - 1).bit_length() if span > 1 else 0)


def lower_beta(
    w: Sequence[int],
    x,
    tol: Optional[Tolerance] = None,
    *,
    bracket: Optional[Tuple[Dyadic, Dyadic]] = None,
    verify: bool = True,
) -> Enclosure:
    """Enclosure of ``beta_lo(w)``, the root of ``x = sum w_i beta^-i`` on ``(1, inf)``.

    Returns the exact enclosure ``[1, 1]`` in the degenerate cases.  With
    ``verify`` the result is checked by expanding ``x`` just above and just
    below the enclosure; a word that starts no expansion of ``x`` raises
    :class:`NotInOmega` carrying the expansion actually observed.
    """
    w = Word(w)
    x = _x(x)
    tol = tol or Tolerance()
    if lower_is_one(w, x):
        return Enclosure.exact(1)
    if w.is_zero():
        raise NotInOmega(f"{w} cannot start an expansion of x = 1")
    lo, hi = bracket if bracket is not None else (Dyadic(1), _root_bracket_hi(w, x))
    enc = solve_monotone_root(lambda b: eval_fw(w, x, b), lo, hi, tol, target=0)
    if enc.hi <= 1:
        # the only sign change sits at 1 itself, outside (1, inf)
        seen = expand_digits(x, Dyadic(1) + tol.eps, len(w))
        raise NotInOmega(f"{w} has no endpoint above 1: expansion just above 1 is {seen}", seen)
    if verify:
        n = len(w)
        eps = tol.eps
        if enc.is_exact():
            at = expand_digits(x, enc.lo, n)
            if at != w:
                raise NotInOmega(f"{w} is not the expansion prefix at its root: found {at}", at)
        above = expand_digits(x, enc.hi + eps, n)
        if above < w:
            raise NotInOmega(f"{w} starts no expansion of x: expansion above root is {above}", above)
        below_pt = enc.lo - eps
        if below_pt <= 1:
            below_pt = Dyadic(1) + eps
        if below_pt < enc.lo:
            below = expand_digits(x, below_pt, n)
            if not below < w:
                raise NotInOmega(f"{w} starts no expansion of x: expansion below root is {below}", below)
    return enc


def _prefix_le(w: Word, x: Dyadic):
    n = len(w)

    def pred(b: Dyadic) -> bool:
        return expand_digits(x, b, n) <= w

    return pred


def upper_beta(w: Sequence[int], x, tol: Optional[Tolerance] = None, *, lower: Optional[Enclosure] = None) -> Enclosure:
    """Enclosure of ``beta_hi(w) = sup of the cylinder`` by bisection on the prefix predicate.

    Starting from a point of the cylinder of ``w`` the upper bracket is doubled until the
    expansion prefix exceeds ``w``.  If the cylinder is narrower than the
    tolerance the precision is escalated.
    """
    w = Word(w)
    x = _x(x)
    tol = tol or Tolerance()
    pred = _prefix_le(w, x)
    while True:
        low = lower or lower_beta(w, x, tol, verify=False)
        start = low.hi if low.hi > 1 else Dyadic(1) + tol.eps
        digits = expand_digits(x, start, len(w))
        if digits == w:
            break
        if digits < w:
            raise NotInOmega(f"{w} starts no expansion of x: expansion at {start} is {digits}", digits)
        # cylinder narrower than the tolerance around its lower end
        tol = tol.escalate()
        lower = None
    hi = start + 1
    while pred(hi):
        hi = hi + (hi - start)
    return solve_monotone_root(pred, start, hi, tol)


def _grow_to(fn, lo: Dyadic, hi: Dyadic, target) -> Dyadic:
    # f_w is increasing wherever it is nonnegative, so doubling finds a crossing
    while fn(hi) < target:
        hi = hi + (hi - lo)
    return hi


def is_full_param(
    w: Sequence[int], x, tol: Optional[Tolerance] = None, *, lower: Optional[Enclosure] = None, with_margin: bool = False
):
    """Whether the cylinder of ``w`` is full, i.e. ``f_w`` maps it onto ``[0, 1)``.

    Solves ``f_w = 1`` and probes the expansion just below the root: the
    cylinder is full iff the root sits at the top of the cylinder.  When the probe
    would fall below ``beta_lo`` the precision is escalated.  With
    ``with_margin`` the probe offset is returned alongside.
    """
    w = Word(w)
    x = _x(x)
    tol = tol or Tolerance()
    if lower_is_one(w, x):
        return (False, None) if with_margin else False
    fw = lambda b: eval_fw(w, x, b)  # noqa: E731
    while True:
        low = lower or lower_beta(w, x, tol, verify=False)
        hi = _grow_to(fw, low.lo, _root_bracket_hi(w, x) + 1, 1)
        root = solve_monotone_root(fw, low.lo, hi, tol, target=1)
        probe = root.lo - tol.eps
        if probe > low.hi:
            break
        tol = tol.escalate()
        lower = None
    full = expand_digits(x, probe, len(w)) == w
    if with_margin:
        return full, tol.eps
    return full


def param_cylinder(w: Sequence[int], x, tol: Optional[Tolerance] = None) -> ParamCylinder:
    """The parameter cylinder of a single word, with both endpoints and the fullness flag."""
    w = Word(w)
    x = _x(x)
    tol = tol or Tolerance()
    low = lower_beta(w, x, tol)
    up = upper_beta(w, x, tol, lower=low)
    one = lower_is_one(w, x)
    return ParamCylinder(w, low, up, one, False if one else is_full_param(w, x, tol, lower=low))


# ---------------------------------------------------------------------------
# window enumeration


@dataclass
class _Node:
    word: Word
    lower: Enclosure
    upper: Optional[Enclosure]  # None for the root, whose interval is (1, inf)
    lower_is_one: bool


def _digit_at(x: Dyadic, beta: Dyadic, n: int) -> Tuple[Word, int]:
    digits = expand_digits(x, beta, n + 1)
    return digits[:n], digits[n]


def _probe(x: Dyadic, w: Word, points) -> int:
    """Digit following ``w`` at the first point that lies in the cylinder of ``w``.

    Enclosure ends may be exact boundaries (excluded from the half-open
    cylinder), so a second point one tolerance inside is tried.
    """
    for pt in points:
        pre, k = _digit_at(x, pt, len(w))
        if pre == w:
            return k
    raise ToleranceUnreachable(f"probes left I({w}); cylinder narrower than tolerance")


def _children(node: _Node, x: Dyadic, window: Tuple[Dyadic, Dyadic], tol: Tolerance) -> List[ParamCylinder]:
    w = node.word
    n = len(w)
    wlo, whi = window
    # probes inside the cylinder: the window ends clipped to the certified interior
    q = wlo if wlo > node.lower.hi else node.lower.hi
    if node.upper is None:
        p, top_probe = whi, None
    else:
        p = whi if whi < node.upper.lo else node.upper.lo
        top_probe = node.upper.lo
    if q == 1:
        q = Dyadic(1) + tol.eps
    k_first = _probe(x, w, (q, q + tol.eps))
    k_last = _probe(x, w, (p, p - tol.eps))
    k_top = None if top_probe is None else _probe(x, w, (top_probe, top_probe - tol.eps))

    bracket = (node.lower.lo, node.upper.hi if node.upper is not None else None)
    cuts: Dict[int, Enclosure] = {}

    def cut(k: int) -> Enclosure:
        if k not in cuts:
            child = w + (k,)
            if k == 0:
                cuts[k] = node.lower
            else:
                hi = bracket[1] if bracket[1] is not None else _root_bracket_hi(child, x)
                cuts[k] = lower_beta(child, x, tol, bracket=(bracket[0], hi), verify=False)
        return cuts[k]

    out = []
    for k in range(k_first, k_last + 1):
        child = w + (k,)
        one = lower_is_one(child, x)
        lower = node.lower if k == 0 else cut(k)
        rightmost = k_top is not None and k == k_top
        upper = node.upper if rightmost else cut(k + 1)
        if one:
            full = False
        elif not rightmost:
            # f_{wk} runs from 0 at beta_lo(wk) to 1 at beta_lo(w(k+1))
            full = True
        else:
            full = is_full_param(child, x, tol, lower=lower)
        out.append(ParamCylinder(child, lower, upper, one, full))
    return out


def enumerate_param_levels(
    x, n: int, window, tol: Optional[Tolerance] = None, cap: int = DEFAULT_PARAM_CAP
) -> List[List[ParamCylinder]]:
    """Order-1 through order-``n`` cylinders meeting ``window``; ``levels[k-1]`` is order ``k``."""
    x = _x(x)
    tol = tol or Tolerance()
    wlo, whi = (Dyadic.coerce(v) for v in window)
    if not 1 < wlo < whi:
        raise ValueError("window must satisfy 1 < lo < hi")
    if n < 1:
        raise ValueError("n must be positive")
    frontier = [_Node(Word(), Enclosure.exact(1), None, True)]
    levels: List[List[ParamCylinder]] = []
    total = 0
    for _ in range(n):
        level: List[ParamCylinder] = []
        for node in frontier:
            level.extend(_children(node, x, (wlo, whi), tol))
            if total + len(level) > cap:
                raise CapExceeded(f"more than {cap} parameter cylinders in window")
        total += len(level)
        levels.append(level)
        frontier = [_Node(c.word, c.lower, c.upper, c.lower_is_one) for c in level]
    return levels


def enumerate_param_window(x, n: int, window, tol: Optional[Tolerance] = None, cap: int = DEFAULT_PARAM_CAP) -> List[ParamCylinder]:
    """Order-``n`` cylinders meeting ``window``, in lexicographic (= positional) order.

    Children of a cylinder are cut where ``beta * f_w(beta)`` crosses an integer
    ``k``, i.e. at ``beta_lo(wk)``.  Every child except the rightmost runs
    ``f`` from 0 to 1 and is full unless its lower end is 1; the rightmost
    child is tested with :func:`is_full_param`.
    """
    return enumerate_param_levels(x, n, window, tol, cap)[-1]


def default_window(x) -> Tuple[Dyadic, Dyadic]:
    x = _x(x)
    return Dyadic(1) + Dyadic(1, -8), Dyadic(math.ceil(1 / x.to_fraction()) + 2)


# ---------------------------------------------------------------------------
# phi-slices


def phi_slice(cyl: ParamCylinder, x, target, radius, tol: Optional[Tolerance] = None) -> PhiSlice:
    """The bases of the cylinder where ``|f_w(beta) - target| < radius``.

    ``f_w`` increases on the cylinder of ``w`` from ``f_w(beta_lo)`` (0, or ``f_w(1)`` in
    the degenerate case) to ``f_w(beta_hi)``, so the slice is an interval whose
    ends solve ``f_w = target -/+ radius``, clipped to the cylinder.
    """
    x = _x(x)
    tol = tol or Tolerance()
    target, radius = Dyadic.coerce(target), Dyadic.coerce(radius)
    if not 0 <= target <= 1:
        raise ValueError("target must lie in [0, 1]")
    if not radius > 0:
        raise ValueError("radius must be positive")
    w = cyl.word
    fw = lambda b: eval_fw(w, x, b)  # noqa: E731
    f_bottom = fw(Dyadic(1)) if cyl.lower_is_one else Dyadic(0)
    f_top = fw(cyl.upper.hi)  # at least f_w(beta_hi)
    a, b = target - radius, target + radius
    lo_b, hi_b = cyl.lower.lo, cyl.upper.hi
    if b <= f_bottom or a >= f_top:
        return PhiSlice(w, target, radius, None)

    left = cyl.lower if a <= f_bottom else solve_monotone_root(fw, lo_b, hi_b, tol, target=a)
    if b >= f_top:
        right = cyl.upper
    else:
        root = solve_monotone_root(fw, lo_b, hi_b, tol, target=b)
        right = cyl.upper if root.lo >= cyl.upper.lo else root
    if left.lo >= cyl.upper.hi or right.hi <= left.lo:
        return PhiSlice(w, target, radius, None)
    return PhiSlice(w, target, radius, (left, right))


# ---------------------------------------------------------------------------
# structural checks


@dataclass
class StructuralReport:
    x: Dyadic
    n: int
    cylinders_checked: int = 0
    checks: Dict[str, int] = field(default_factory=dict)
    violations: Dict[str, List[str]] = field(default_factory=dict)
    diagnostics: Dict[str, object] = field(default_factory=dict)

    def record(self, name: str, ok: bool, what: str = ""):
        self.checks[name] = self.checks.get(name, 0) + 1
        if not ok:
            self.violations.setdefault(name, []).append(what)

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def to_json(self) -> dict:
        return {
            "x": self.x.to_json(),
            "n": self.n,
            "cylinders_checked": self.cylinders_checked,
            "checks": self.checks,
            "violations": self.violations,
            "diagnostics": self.diagnostics,
            "ok": self.ok,
        }


def _frac(d: Dyadic) -> Fraction:
    return d.to_fraction()


def _upper_length_bound(c: ParamCylinder, x: Dyadic) -> Fraction:
    """Largest possible value of ``x^-1 * beta_hi^(1-n)`` over the enclosure."""
    n = c.order
    return 1 / _frac(x) * _frac(c.upper.lo) ** (1 - n)


def _full_length_lower_bound(c: ParamCylinder) -> Fraction:
    """Smallest possible ``(beta_lo - 1)^2 * beta_hi^(-1-n)`` over the enclosures."""
    n = c.order
    return (_frac(c.lower.lo) - 1) ** 2 * _frac(c.upper.hi) ** (-1 - n)


def structural_checks(
    x,
    n: int,
    window,
    tol: Optional[Tolerance] = None,
    cap: int = DEFAULT_PARAM_CAP,
    concat_orders: Sequence[int] = (1,),
    levels: Optional[List[List[ParamCylinder]]] = None,
) -> StructuralReport:
    """Evaluate the cylinder inequalities and memberships on every enumerated cylinder.

    Checked per cylinder of orders 1..n meeting the window:

    * length upper bound ``length <= x^-1 beta_hi^(1-n)``;
    * full cylinders: ``length >= (beta_lo - 1)^2 beta_hi^(-1-n)``;
    * just above ``beta_lo`` the expansion is ``w 0^16``;
    * ``w`` is admissible for bases above ``beta_lo``;
    * full ``w``: ``wv`` starts an expansion for ``v`` admissible and full for ``v``
      full, at base ``beta_lo(w)`` (orders in ``concat_orders``);
    * if no expansion starts with ``w1`` then ``w`` and ``w0`` share a cylinder;
    * any ``n + 1`` consecutive cylinders contain a full one;
    * the child structure (all children but the rightmost are full) against
      :func:`is_full_param`;
    * tiling and refinement of consecutive enclosures.

    The ratio bounds ``beta_hi/beta_lo^2 < 1`` and ``(beta_hi/beta_lo)^(q+1) < 3``
    are collected as diagnostics only.
    """
    x = _x(x)
    tol = tol or Tolerance()
    eps = tol.eps
    if levels is None:
        levels = enumerate_param_levels(x, n, window, tol, cap)
    report = StructuralReport(x, n)
    slack = Fraction(4) * _frac(eps)
    ratio_stats = {"max_hi_over_lo_sq": 0.0, "max_ratio_pow": 0.0, "premise_cylinders": 0}

    for order, level in enumerate(levels, start=1):
        for j, c in enumerate(level):
            report.cylinders_checked += 1
            w = c.word
            lmin, lmax = (_frac(v) for v in c.length_bounds())
            report.record("length upper bound", lmin <= _upper_length_bound(c, x) + slack, str(w))
            if c.is_full:
                report.record("full length lower bound", lmax + slack >= _full_length_lower_bound(c), str(w))
                report.record("full implies lower > 1", not c.lower_is_one, str(w))

            if not c.lower_is_one:
                probe = c.lower.hi + eps
                report.record("expansion at beta_lo is w0^inf", expand_digits(x, probe, order + 16) == w + Word((0,) * 16), str(w))
            # just above a lower end of 1, eps(beta) starts with ~2^bits zeros
            inner = (c.lower.hi * 3 + c.upper.lo).ldexp(-2)
            base_points = [inner, c.upper.hi, c.upper.hi * 2]
            if not c.lower_is_one:
                base_points.append(c.lower.hi + eps)
            report.record("admissible above beta_lo", all(_admissible_escalating(w, b, order + 32) for b in base_points), str(w))

            if c.is_full:
                base = c.lower.lo
                for m in concat_orders:
                    sig, _ = enumerate_sigma(base, m)
                    for v in sig:
                        wv = w + v.word
                        try:
                            lower_beta(wv, x, tol)
                            in_omega = True
                        except NotInOmega:
                            in_omega = False
                        report.record("concat stays a valid prefix", in_omega, str(wv))
                        if v.is_full and in_omega:
                            report.record("concat of full is full", is_full_param(wv, x, tol), str(wv))

            if not c.lower_is_one:
                w1 = w + (1,)
                try:
                    lower_beta(w1, x, tol)
                    w1_in = True
                except NotInOmega:
                    w1_in = False
                if not w1_in:
                    pts = [c.lower.hi + eps, c.upper.lo]
                    same = all(expand_digits(x, b, order + 1) == w + (0,) for b in pts)
                    report.record("cylinder of w0 equals cylinder of w when w1 is invalid", same, str(w))

            if j + 1 < len(level):
                nxt = level[j + 1]
                gap = abs(_frac(nxt.lower.midpoint()) - _frac(c.upper.midpoint()))
                report.record("tiling", gap <= 2 * _frac(eps), f"{w}|{nxt.word}")

            if order > 1:
                parent = w[:-1]
                pc = next((p for p in levels[order - 2] if p.word == parent), None)
                inside = pc is not None and pc.lower.lo - eps <= c.lower.hi and c.upper.lo <= pc.upper.hi + eps
                report.record("refinement", inside, str(w))

            if not c.lower_is_one:
                lo, hi = _frac(c.lower.lo), _frac(c.upper.hi)
                if x * Dyadic.coerce(c.lower.lo) ** order >= 2 * order * order:
                    ratio_stats["premise_cylinders"] += 1
                    ratio_stats["max_hi_over_lo_sq"] = max(ratio_stats["max_hi_over_lo_sq"], float(hi / lo**2))
                    ratio_stats["max_ratio_pow"] = max(ratio_stats["max_ratio_pow"], float((hi / lo) ** (order + 1)))

        # children structure: all but the rightmost child of a parent are full
        by_parent: Dict[Word, List[ParamCylinder]] = {}
        for c in level:
            by_parent.setdefault(c.word[:-1], []).append(c)
        for parent, kids in by_parent.items():
            for c in kids:
                if c.lower_is_one:
                    continue
                direct = is_full_param(c.word, x, tol, lower=c.lower)
                report.record("fullness matches direct test", direct == c.is_full, str(c.word))

        flags = [c.is_full for c in level]
        bad = window_violations(flags, [c.word for c in level], order + 1)
        report.record("n+1 consecutive contain a full cylinder", not bad, ";".join(str(b) for b in bad[:3]))

    report.diagnostics["ratio_bounds"] = ratio_stats
    return report
