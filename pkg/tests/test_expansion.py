import math
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from betalab.dyadic import Dyadic, to_dyadic
from betalab.errors import AmbiguousDigit
from betalab.expansion import (
    CappedOrbit,
    beta_transform,
    expand,
    expansion_of_one,
    orbit,
    reconstruct,
    star_expansion_of_one,
    star_stream,
)
from betalab.words import Word
from oracles import greedy_digits, one_expansion, star_digits

bases = st.builds(lambda m: Dyadic(m, -8), st.integers(257, 1024))  # (1, 4] on the 2^-8 grid
points = st.builds(lambda m: Dyadic(m, -16), st.integers(0, 1 << 16))  # [0, 1]


def test_examples():
    e = expand(to_dyadic("0.75"), to_dyadic("1.5"), 4)
    assert e.digits == Word("1000") and e.remainder == Fraction(27, 64)
    assert expand(1, 2, 3).digits == Word("200") and expand(1, 2, 3).remainder == 0
    e = expand(1, to_dyadic("1.5"), 6)
    assert e.digits == Word("101000") and e.remainder == Fraction(27, 64)
    assert beta_transform(to_dyadic("0.75"), to_dyadic("1.5")) == Fraction(1, 8)


def test_star_examples():
    assert star_expansion_of_one(2, 5) == Word("11111")
    assert star_expansion_of_one(to_dyadic("1.5"), 10) == Word("1010000010")
    assert star_expansion_of_one(to_dyadic("2.5"), 4) == Word("2101")
    assert str(expansion_of_one(2, 10)) == "2(0)"
    assert not star_stream(to_dyadic("1.5"), 64).complete


@given(points, bases, st.integers(0, 30))
def test_expand_matches_fraction_oracle(x, beta, n):
    digits, rem = greedy_digits(x.to_fraction(), beta.to_fraction(), n)
    e = expand(x, beta, n)
    assert tuple(e.digits) == digits
    assert e.remainder.to_fraction() == rem


@given(points, bases, st.integers(0, 20))
def test_reconstruction_identity(x, beta, n):
    e = expand(x, beta, n)
    assert reconstruct(e.digits, e.remainder, beta) == x.to_fraction()
    assert 0 <= e.remainder < 1 or (n == 0 and x == 1)
    assert all(0 <= d <= math.floor(beta) for d in e.digits)


@given(points, bases)
def test_orbit_matches_expand(x, beta):
    states = list(orbit(x, beta, 12))
    assert states[-1].digits_emitted == expand(x, beta, 12).digits
    assert states[-1].point == expand(x, beta, 12).remainder


@given(bases)
def test_star_stream_matches_oracle(beta):
    b = beta.to_fraction()
    digits, finite = one_expansion(b, 64)
    assert expansion_of_one(beta, 64).complete == finite
    assert tuple(star_stream(beta, 64).take(40)) == star_digits(b, 64)[:40]


def test_capped_orbit_integer_base_is_exact():
    x = Dyadic(12345, -20)
    orb = CappedOrbit(x, 3)
    exact = expand(x, 3, 50).digits
    assert tuple(orb.advance() for _ in range(50)) == tuple(exact)


@given(st.integers(1, (1 << 64) - 1), st.integers(1, (1 << 64) - 1))
def test_capped_orbit_tracks_exact_digits(xm, bm):
    beta = Dyadic((1 << 64) + bm, -64)  # base in (1, 2)
    x = Dyadic(xm, -64)
    exact = expand(x, beta, 60).digits
    orb = CappedOrbit(x, beta)
    try:
        got = tuple(orb.advance() for _ in range(60))
    except AmbiguousDigit:
        assume(False)
    # 256 fractional bits lose about log2(beta) < 1 bit per step
    assert got == tuple(exact)


def test_capped_orbit_flags_boundary():
    # the image of 0 is the integer 0, a digit boundary in a non-integer base
    orb = CappedOrbit(Dyadic(0), Dyadic((1 << 64) + 1, -64))
    with pytest.raises(AmbiguousDigit):
        orb.advance()


def test_input_validation():
    with pytest.raises(ValueError):
        expand(Dyadic(1, -1), 1, 3)
    with pytest.raises(ValueError):
        expand(Dyadic(3, -1), 2, 3)
    with pytest.raises(ValueError):
        expand(Dyadic(1, -1), 2, -1)
