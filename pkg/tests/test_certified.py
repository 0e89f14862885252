from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longdisp.certified import (CReal, Interval, PrecisionError, ceil_of, floor_of, parse_rational,
                                precision, rational_str, to_decimal)

fractions = st.fractions(min_value=-1000, max_value=1000, max_denominator=10 ** 6)
positive = st.fractions(min_value=Fraction(1, 1000), max_value=1000, max_denominator=10 ** 6)


def test_parse_rational_forms():
    assert parse_rational("3/5") == Fraction(3, 5)
    assert parse_rational("0.95") == Fraction(19, 20)
    assert parse_rational(7) == 7
    assert parse_rational(" -2 / 4 ") == Fraction(-1, 2)


def test_exact_arithmetic_stays_exact():
    x = CReal.of("1/3") * 3 - 1
    assert x.is_exact and x.exact == 0


def test_perfect_square_root_is_exact():
    r = CReal.of(Fraction(9, 4)).sqrt()
    assert r.is_exact and r.exact == Fraction(3, 2)


def test_square_of_a_square_root_is_exact():
    r = CReal.of(2).sqrt()
    assert not r.is_exact
    assert (r * r).exact == 2
    assert (r ** 2).exact == 2


def test_sqrt2_enclosure():
    r = CReal.of(2).sqrt()
    lo, hi = r.lower(200), r.upper(200)
    assert lo * lo < 2 < hi * hi
    assert hi - lo < Fraction(1, 2 ** 190)


def test_comparison_certifies_close_values():
    a = CReal.of(2).sqrt()
    b = CReal.of(Fraction(14142135623730951, 10 ** 16))
    assert a < b


def test_equal_irrationals_are_undecided():
    a = CReal.of(2).sqrt() + CReal.of(3).sqrt()
    b = CReal.of(3).sqrt() + CReal.of(2).sqrt()
    with precision(256):
        assert (a - b).sign() is None
        with pytest.raises(PrecisionError):
            a.cmp(b)


def test_floor_and_ceil():
    assert floor_of(CReal.of(10).sqrt()) == 3
    assert ceil_of(CReal.of(10).sqrt()) == 4
    assert floor_of(Fraction(-1, 2)) == -1


def test_decimal_strings():
    assert to_decimal(Fraction(1, 3), 5) == "0.33333"
    assert to_decimal(Fraction(-5, 2)) == "-2.5"
    assert rational_str(Fraction(6, 4)) == "3/2"
    assert rational_str(Fraction(4)) == "4"


@given(fractions, fractions)
def test_interval_product_contains_product(a, b):
    iv = Interval(a - Fraction(1, 7), a + Fraction(1, 7)) * Interval(b, b + 1)
    assert iv.lo <= a * b <= iv.hi
    assert iv.lo <= (a + Fraction(1, 7)) * (b + 1) <= iv.hi


@settings(max_examples=60)
@given(positive, st.integers(min_value=2, max_value=5))
def test_root_encloses_true_value(x, n):
    r = CReal.of(x).root(n)
    lo, hi = r.lower(96), r.upper(96)
    assert lo ** n <= x <= hi ** n
    assert math.isclose(float(r), float(x) ** (1 / n), rel_tol=1e-12)


@settings(max_examples=60)
@given(positive, positive)
def test_sum_of_roots_ordering_matches_floats(x, y):
    a, b = CReal.of(x).sqrt(), CReal.of(y).sqrt()
    fa, fb = math.sqrt(x), math.sqrt(y)
    if abs(fa - fb) > 1e-9 * max(fa, fb):
        assert (a < b) == (fa < fb)
