import pytest
from hypothesis import given
from hypothesis import strategies as st

from betalab.errors import DepthExhausted, IndexOutOfRange, ParseError
from betalab.words import (
    DigitStream,
    Ordering,
    Word,
    concat,
    increment_last,
    lex_compare,
    parse_stream,
    parse_word,
    power,
    prefix,
    shift,
)

digits = st.lists(st.integers(0, 12), max_size=12)


def padded(w, n):
    return tuple(w) + (0,) * (n - len(w))


def test_parse_and_print():
    assert Word("1011") == (1, 0, 1, 1)
    assert str(Word([1, 0, 12])) == "[1,0,12]"
    assert parse_word("[1,0,12]") == Word([1, 0, 12])
    assert parse_word("") == Word()
    with pytest.raises(ParseError):
        parse_word("1a")
    with pytest.raises(ParseError):
        parse_word("[1,2")
    with pytest.raises(ValueError):
        Word([1, -1])


@given(digits)
def test_print_parse_round_trip(w):
    w = Word(w)
    assert parse_word(str(w)) == w


def test_sequence_algebra():
    assert shift("1011", 1) == Word("011")
    assert concat("10", "1") == Word("101")
    assert power("10", 3) == Word("101010")
    assert prefix("1011", 2) == Word("10")
    assert increment_last("1011") == Word("1012")
    with pytest.raises(IndexOutOfRange):
        shift("10", 3)
    with pytest.raises(IndexOutOfRange):
        prefix("10", 5)
    with pytest.raises(IndexOutOfRange):
        increment_last("")
    assert isinstance(Word("101")[1:], Word)


@given(digits, digits)
def test_concat_then_shift(u, v):
    u, v = Word(u), Word(v)
    assert (u + v).shift(len(u)) == v
    assert (u + v).prefix(len(u)) == u


def test_lex_examples():
    assert lex_compare("10", "11", 4) is Ordering.LESS
    assert lex_compare("110", "11", 4) is Ordering.EQUAL
    assert lex_compare("2", "1(1)", 4) is Ordering.GREATER
    assert lex_compare("1(0)", "1", 3) is Ordering.EQUAL


def test_lex_equal_only_when_provable():
    a = DigitStream(Word("1111"), None)
    with pytest.raises(DepthExhausted):
        lex_compare(a, "(1)", 4)
    assert lex_compare("(10)", "10(10)", 3) is Ordering.EQUAL
    with pytest.raises(DepthExhausted):
        lex_compare("(1)", "1111(0)", 4)


@given(digits, digits)
def test_lex_matches_padded_tuples(u, v):
    n = max(len(u), len(v), 1)
    expect = (padded(u, n) > padded(v, n)) - (padded(u, n) < padded(v, n))
    assert lex_compare(Word(u), Word(v), n) == expect


@given(digits, digits, digits)
def test_lex_transitive(a, b, c):
    n = max(len(a), len(b), len(c), 1)
    ab, bc = lex_compare(Word(a), Word(b), n), lex_compare(Word(b), Word(c), n)
    if ab <= 0 and bc <= 0:
        assert lex_compare(Word(a), Word(c), n) <= 0


def test_stream_digits():
    s = parse_stream("2(10)")
    assert s.take(6) == Word("210101")
    assert str(s) == "2(10)"
    assert parse_stream("101...").complete is False
    with pytest.raises(DepthExhausted):
        parse_stream("101...").digit(4)
    assert Word("101").digit(5) == 0


@given(st.lists(st.integers(0, 3), min_size=1, max_size=5), st.lists(st.integers(0, 3), min_size=1, max_size=4))
def test_periodic_stream_agrees_with_unrolled(pre, per):
    s = DigitStream(Word(pre), Word(per))
    unrolled = Word(pre) + Word(per) * 10
    assert s.take(len(unrolled)) == unrolled
