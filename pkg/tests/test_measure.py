import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betalab import measure
from betalab.dyadic import Dyadic, to_dyadic
from betalab.errors import ParseError, RunFailed, SlopeTooSmall, UnsupportedForm
from betalab.measure import (
    AffineMap,
    RateSpec,
    ScanConfig,
    TargetSpec,
    _blocks,
    _sample,
    beta_star,
    hit_scan_param,
    recurrence_scan,
    recurrence_slice,
    run_scan,
    scan_summary,
    tail_sum,
)
from betalab.rng import uniform_bits, uniform_dyadic
from betalab.shift import enumerate_xi, shift_cylinder


# ---------------------------------------------------------------------------
# specs


def test_rate_spec_parsing():
    assert RateSpec.parse("power:1,2").value(3) == Fraction(1, 9)
    assert RateSpec.parse("geom:1,0.5").value(4) == Fraction(1, 16)
    assert RateSpec.parse("const:0.25").value(7) == Fraction(1, 4)
    l = RateSpec.parse("log:2")
    assert l.kind == "linlog" and l.params[1] == 2
    assert RateSpec.parse("l:2,0,0").params[0] == 2
    for bad in ("cubic:1", "power:1", "geom:1,2,3"):
        with pytest.raises(ParseError):
            RateSpec.parse(bad)
    with pytest.raises(ParseError):
        RateSpec.parse("power:2,1").check_phi()
    with pytest.raises(ParseError):
        RateSpec.parse("l:1,0,0").check_phi()
    with pytest.raises(UnsupportedForm):
        RateSpec.parse("power:1,0.5").value(2)


def test_series_convergence_flags():
    assert RateSpec.parse("power:1,2").series_converges()
    assert not RateSpec.parse("power:1,1").series_converges()
    assert RateSpec.parse("geom:1,0.5").series_converges()
    assert not RateSpec.parse("const:1").series_converges()


@given(st.integers(1, 5000), st.sampled_from(["power:1,1", "power:1,2", "power:0.5,3", "geom:1,0.5", "power:1,1.5"]))
@settings(max_examples=80)
def test_scaled_ceil_is_exact_ceiling(n, spec):
    phi = RateSpec.parse(spec)
    got = phi.scaled_ceil(n, 64)
    try:
        exact = phi.value(n) * 2**64
        assert got == math.ceil(exact)
    except UnsupportedForm:
        with mpmath.workdps(60):
            v = float(phi.params[0]) / mpmath.mpf(n) ** mpmath.mpf(1.5) * mpmath.mpf(2) ** 64
            assert got - 1 < v <= got


def test_target_and_affine_specs():
    t = TargetSpec.parse("periodic:0.25,0.5")
    assert t.at(1) == Fraction(1, 4) and t.at(4) == Fraction(1, 2)
    assert TargetSpec.parse("0.3").kind == "const"
    tab = TargetSpec.parse([0.5, 0.25])
    assert tab.at(2) == Fraction(1, 4)
    with pytest.raises(ParseError):
        tab.at(3)
    with pytest.raises(ParseError):
        TargetSpec.parse("const:1.5")
    L = AffineMap.parse("-2,1.5")
    assert L.kappa == 2
    assert L(Fraction(0)) == 1 and L(Fraction(1)) == 0 and L(Fraction(1, 2)) == Fraction(1, 2)
    with pytest.raises(ParseError):
        AffineMap.parse("1")


def test_blocks_cover_range():
    assert _blocks(1) == [(1, 1)]
    assert _blocks(8) == [(1, 1), (2, 3), (4, 8)]
    assert _blocks(10) == [(1, 1), (2, 3), (4, 7), (8, 10)]
    for n_max in range(1, 70):
        b = _blocks(n_max)
        assert b[0][0] == 1 and b[-1][1] == n_max
        assert all(p[1] + 1 == q[0] for p, q in zip(b, b[1:]))


# ---------------------------------------------------------------------------
# partial sums


def test_tail_sum_examples():
    s = tail_sum("geom:1,0.5", 1, 20)
    assert s.is_exact() and s.lo == 1 - Fraction(1, 2**20)
    s = tail_sum("power:1,1", 1, 4)
    assert s.lo <= Fraction(25, 12) <= s.hi and s.width() <= Fraction(1, 2**127)
    s = tail_sum("power:1,2", 100, 10**6)
    assert Fraction(1, 100) - Fraction(1, 10**6) < s.lo and s.hi < Fraction(1, 99)


@given(st.integers(1, 60), st.integers(0, 60), st.sampled_from(["power:1,1", "power:1,2", "geom:0.5,0.75", "const:0.125"]))
def test_tail_sum_matches_fraction_sum(m, extra, spec):
    phi = RateSpec.parse(spec)
    N = m + extra
    exact = sum(phi.value(n) for n in range(m, N + 1))
    s = tail_sum(phi, m, N)
    assert s.lo <= exact <= s.hi


def test_tail_sum_long_irrational_terms():
    # sum of n^-1.5 over [1, 3000] against mpmath's zeta difference
    s = tail_sum("power:1,1.5", 1, 3000)
    with mpmath.workdps(40):
        ref = mpmath.zeta(1.5) - mpmath.zeta(1.5, 3001)
    assert float(s.lo) <= float(ref) <= float(s.hi)
    assert s.width() < Fraction(3000, 2**127)


# ---------------------------------------------------------------------------
# convergence threshold


def test_beta_star_closed_forms():
    assert beta_star("l:2,0,0").enclosure.lo == 1
    assert beta_star("l:0,0,0").infinite
    assert beta_star("l:-1,5,0").infinite
    assert beta_star("const:3").infinite
    e = beta_star("log:2").enclosure
    assert float(e.lo) <= math.exp(0.5) <= float(e.hi)
    assert e.width() < Fraction(1, 2**100)
    assert beta_star("log:2").rigorous


def test_beta_star_heuristic_is_flagged():
    with pytest.raises(UnsupportedForm):
        beta_star("power:1,-0.5", heuristic=False)
    res = beta_star(None, terms=lambda n: 2 * n)
    assert not res.rigorous and res.enclosure.hi <= Dyadic(2)
    # l_n = 2 ln n behaves like a p-series with threshold e^(1/2)
    res = beta_star(None, terms=lambda n: 2 * np.log(n))
    assert not res.rigorous
    assert abs(float(res.enclosure.lo) - math.exp(0.5)) < 0.2


# ---------------------------------------------------------------------------
# recurrence slices


def test_recurrence_slice_examples():
    s = recurrence_slice("11", 2, "1,0", to_dyadic("0.1"))
    # phi is rounded to 64 bits, so the left end is near 29/30
    assert abs(float(s.interval[0]) - 29 / 30) < 1e-15 and s.interval[1] == 1
    assert s.upper_ok and s.lower_ok and s.slope_ok
    s = recurrence_slice("10", 2, "0,0", to_dyadic("0.5"))
    assert s.interval == (Fraction(1, 2), Fraction(5, 8)) and s.left_closed
    assert s.length == s.phi / 4
    s = recurrence_slice("11", 2, "1,0", Dyadic(1, -30))
    assert s.lower_bound <= s.length <= s.upper_bound


def test_recurrence_slice_hand_solved():
    # w = "1", base 2, L(x) = x/2: g(x) = 2(x - 1/2) - x/2 = 3x/2 - 1
    s = recurrence_slice("1", 2, "0.5,0", to_dyadic("0.125"))
    assert s.interval == (Fraction(7, 12), Fraction(3, 4)) and not s.left_closed
    # w = "01", base 2, L = 1/4: g(x) = 4(x - 1/4) - 1/4 crosses +-1/8 at 9/32 and 11/32
    s = recurrence_slice("01", 2, "0,0.25", to_dyadic("0.125"))
    assert s.interval == (Fraction(9, 32), Fraction(11, 32))
    # L = 1.5 - x is clipped to 1 on [0, 1/4), so g = 4x - 1 there
    s = recurrence_slice("00", 2, "-1,1.5", to_dyadic("0.25"))
    assert s.interval == (Fraction(3, 16), Fraction(1, 4)) and not s.left_closed
    with pytest.raises(SlopeTooSmall):
        recurrence_slice("1", 2, "1,0", to_dyadic("0.1"))


def _slice_oracle(w, beta, L, phi, grid=400):
    """Grid points of the cylinder where |beta^n (x - left) - L(x)| < phi."""
    cyl = shift_cylinder(w, beta)
    bn = Fraction(beta) ** len(w)
    pts = [cyl.left + (cyl.right - cyl.left) * Fraction(i, grid) for i in range(grid)]
    return [p for p in pts if abs(bn * (p - cyl.left) - L(p)) < phi], pts


@given(
    st.sampled_from(["1.7", "2", "2.3"]),
    st.integers(3, 8),
    st.integers(0, 10**6),
    st.fractions(-1, 1, max_denominator=64),
    st.fractions(0, 1, max_denominator=64),
    st.fractions(Fraction(1, 1000), 1, max_denominator=1000),
)
@settings(max_examples=40)
def test_recurrence_slice_bounds_and_membership(beta_text, n, pick, a, b, phi):
    beta = to_dyadic(beta_text)
    xi, _ = enumerate_xi(beta, n)
    w = xi[pick % len(xi)].word
    L = AffineMap(Dyadic.coerce(Fraction(round(a * 64), 64)), Dyadic.coerce(Fraction(round(b * 64), 64)))
    ph = Dyadic.from_fraction_floor(phi, 64)
    s = recurrence_slice(w, beta, L, ph)
    assert s.is_full and s.upper_ok and s.lower_ok and s.slope_ok
    inside, pts = _slice_oracle(w, beta.to_fraction(), L, ph.to_fraction())
    lo, hi = s.interval
    for p in pts:
        expect = p in inside
        got = (lo < p < hi) or (p == lo and s.left_closed)
        assert got == expect


# ---------------------------------------------------------------------------
# scans


def test_rng_is_keyed_by_index():
    assert uniform_bits(7, 3) == uniform_bits(7, 3)
    assert uniform_bits(7, 3) != uniform_bits(7, 4) != uniform_bits(8, 3)
    lo, hi = to_dyadic("1.2"), to_dyadic("2.2")
    for i in range(50):
        d = uniform_dyadic(5, i, lo, hi)
        assert lo <= d < hi and d.e >= -64


def test_trivial_scans_hit_at_step_one():
    curve = hit_scan_param("1", "0", "const:1", ("1.3", "2.7"), 20, 4, seed=3)
    assert curve.first_hit_fraction(1) == 1.0
    curve = recurrence_scan("2", "1,0", "const:1", 20, 4, seed=3)
    assert curve.first_hit_fraction(1) == 1.0


def _exact_hits(beta: Fraction, x: Fraction, target, phi: RateSpec, n_max: int):
    hits = []
    for n in range(1, n_max + 1):
        x = beta * x
        x -= math.floor(x)
        if abs(x - target) < phi.value(n):
            hits.append(n)
    return hits


@given(st.integers(0, 10**6), st.integers(0, 40))
@settings(max_examples=30)
def test_scan_samples_match_exact_orbit(seed, index):
    phi = RateSpec.parse("power:1,1")
    cfg = ScanConfig("param", seed, 50, 60, phi, x=to_dyadic("0.7"), targets=TargetSpec.parse("0.3"), window=(to_dyadic("1.2"), to_dyadic("2.2")))
    res = _sample(cfg, index, 256)
    beta = uniform_dyadic(seed, index, *cfg.window)
    hits = _exact_hits(beta.to_fraction(), cfg.x.to_fraction(), cfg.targets.values[0].to_fraction(), phi, 60)
    assert res is not None
    assert res.first == (hits[0] if hits else None)
    assert res.last == (hits[-1] if hits else None)
    assert res.mask == sum({1 << (h.bit_length() - 1) for h in hits})


def test_recurrence_samples_match_exact_orbit():
    phi = RateSpec.parse("power:1,1")
    L = AffineMap.parse("0.5,0.25")
    cfg = ScanConfig("recurrence", 9, 30, 60, phi, beta=to_dyadic("1.8"), L=L)
    for index in range(30):
        x0 = uniform_dyadic(9, index, Dyadic(0), Dyadic(1))
        hits = _exact_hits(Fraction(9, 5), x0.to_fraction(), L(x0.to_fraction()), phi, 60)
        res = _sample(cfg, index, 256)
        assert res.first == (hits[0] if hits else None) and res.last == (hits[-1] if hits else None)


def test_scan_deterministic_across_workers():
    a = hit_scan_param("0.7", "0.3", "power:1,1", ("1.2", "2.2"), 40, 256, seed=11, workers=1)
    b = hit_scan_param("0.7", "0.3", "power:1,1", ("1.2", "2.2"), 40, 256, seed=11, workers=2)
    assert a.results == b.results and a.to_csv() == b.to_csv()
    c = hit_scan_param("0.7", "0.3", "power:1,1", ("1.2", "2.2"), 40, 256, seed=12)
    assert c.results != a.results


def test_curve_shape_and_summary():
    curve = recurrence_scan("1.8", "0,0.5", "power:0.5,1", 60, 512, seed=2)
    assert curve.is_monotone()
    tails = [curve.tail_fraction_at(lo) for lo, _ in curve.blocks]
    assert all(p >= q for p, q in zip(tails, tails[1:]))
    assert curve.discards == 0
    cfg = ScanConfig("recurrence", 2, 60, 512, RateSpec.parse("power:0.5,1"), beta=to_dyadic("1.8"), L=AffineMap.parse("0,0.5"))
    summary = scan_summary(cfg, curve)
    assert summary["verdict"]["series"] == "divergent" and summary["verdict"]["predicted_measure"] == "full"
    assert len(summary["config_hash"]) == 64 and summary["curve"][-1]["N"] == 512
    lines = curve.to_csv().splitlines()
    assert lines[0].startswith("N,first_hit,") and len(lines) == len(curve.blocks) + 1


def test_scan_validation_and_discards(monkeypatch):
    with pytest.raises(ValueError):
        hit_scan_param("0.7", "0.3", "power:1,1", ("0.9", "2.2"), 10, 10, seed=1)
    with pytest.raises(ParseError):
        hit_scan_param("0.7", "0.3", "l:1,0,0", ("1.2", "2.2"), 10, 10, seed=1)
    # x = 0 sits on a digit boundary at every precision, so every sample is discarded
    monkeypatch.setattr(measure, "uniform_dyadic", lambda *a, **k: Dyadic(0))
    cfg = ScanConfig("recurrence", 1, 5, 4, RateSpec.parse("const:1"), beta=Dyadic(3, -1), L=AffineMap.parse("0,0"))
    with pytest.raises(RunFailed):
        run_scan(cfg)
