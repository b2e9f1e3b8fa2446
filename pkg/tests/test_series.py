from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlh.cohomring import projective_space
from qlh.errors import LaurentModeRequired, MalformedLeadingTerm, NotInvertible, RingMismatch, ZWindowOverflow
from qlh.series import (
    CurveLattice,
    QSeries,
    ZLaurent,
    reversion_residual,
    scalar_series_invert,
    series_arith,
    univariate_reversion,
)

P1 = projective_space(1)
P2 = projective_space(2)


def test_curve_lattice_degree_and_effectivity():
    lat = CurveLattice(("l", "g"), ((1, 0), (-1, 1)))
    assert lat.degree((2, 3)) == 5
    assert lat.pair((1, 1), (1, 1)) == 1
    assert lat.check((1, 0)) == (1, 0)
    with pytest.raises(LaurentModeRequired):
        lat.check((-1, 0))
    assert lat.with_laurent().check((-1, 0)) == (-1, 0)
    assert lat.strata(1) == [(0, 0), (0, 1), (1, 0)]


def test_zlaurent_arithmetic_and_window():
    a = ZLaurent({-1: 2, 1: 1})
    assert (a * a).coeff(0) == 4
    assert (a - a) == ZLaurent()
    assert a.subs_neg_z() == ZLaurent({-1: -2, 1: -1})
    with pytest.raises(ZWindowOverflow):
        a.check_window((0, 3))


def test_unit_times_unit():
    one = QSeries.unit(P1)
    assert series_arith(one, one, "mul") == one


def test_addition_on_p1():
    s = QSeries(P1, {(0,): {0: (1, 0)}, (1,): {0: (0, 1)}})
    t = s + QSeries.unit(P1)
    assert t[(0,)] == {0: (2, 0)}
    assert t[(1,)] == {0: (0, 1)}


def test_h_squared_vanishes_on_p1():
    h = QSeries.monomial(P1, (0,), (0, 1))
    assert (h * h).is_zero()


def test_ring_mismatch():
    with pytest.raises(RingMismatch):
        QSeries.unit(P1) + QSeries.unit(P2)


def test_window_overflow_is_an_error():
    s = QSeries(P1, {(0,): {3: (1, 0)}}, truncation=2, zwindow=(-4, 4))
    with pytest.raises(ZWindowOverflow):
        s * s


def test_geometric_series_inverse():
    s = QSeries(P1, {(0,): {0: (1, 0)}, (1,): {0: (-1, 0)}}, truncation=5)
    inv = scalar_series_invert(s)
    assert all(inv[(d,)] == {0: (1, 0)} for d in range(6))
    assert scalar_series_invert(QSeries.unit(P1)) == QSeries.unit(P1)
    with pytest.raises(NotInvertible):
        scalar_series_invert(QSeries(P1, {(1,): {0: (1, 0)}}))


def test_quintic_i0_inverse():
    s = QSeries(P1, {(0,): {0: (1, 0)}, (1,): {0: (120, 0)}}, truncation=2)
    inv = scalar_series_invert(s)
    assert inv[(1,)] == {0: (-120, 0)}
    assert inv[(2,)] == {0: (14400, 0)}


def test_reversion_identity_and_linear():
    assert univariate_reversion([0], 3) == [0, 1, 0, 0]
    r = univariate_reversion([0, Fraction(7)], 2)
    assert r[:3] == [0, 1, -7]
    assert reversion_residual([0, 7], r, 2) == [0, 0]


def test_quintic_mirror_reversion_back_substitutes():
    g = [0, 770, 717825]
    r = univariate_reversion(g, 3)
    assert r[:3] == [0, 1, -770]
    assert reversion_residual(g, r, 3) == [0, 0, 0]


def test_reversion_rejects_bad_leading_term():
    with pytest.raises(MalformedLeadingTerm):
        univariate_reversion([0, 1], 2, log_coefficient=2)
    with pytest.raises(MalformedLeadingTerm):
        univariate_reversion([1, 1], 2)


def test_records_round_trip():
    s = QSeries(P2, {(0,): {0: (1, 0, 0)}, (1,): {-3: (Fraction(1, 2), 0, 1)}}, truncation=3)
    assert QSeries.from_records(P2, s.to_records(), 3) == s


coeff = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def p2_series(draw, truncation=3):
    terms = {}
    for d in range(truncation + 1):
        val = {}
        for e in draw(st.lists(st.integers(-3, 2), max_size=2, unique=True)):
            val[e] = tuple(draw(coeff) for _ in range(3))
        terms[(d,)] = val
    return QSeries(P2, terms, truncation, (-40, 40))


@given(p2_series(), p2_series(), p2_series())
def test_mul_associative_commutative(a, b, c):
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)


@given(p2_series(), p2_series())
def test_truncation_coherence(a, b):
    assert (a * b).truncate(1) == a.truncate(1) * b.truncate(1)


@given(st.lists(coeff, min_size=4, max_size=4), st.integers(1, 5))
def test_scalar_inverse_two_sided(tail, lead):
    s = QSeries(P1, {(d,): {0: (c, 0)} for d, c in enumerate([Fraction(lead)] + tail)}, 4)
    inv = scalar_series_invert(s)
    assert s * inv == QSeries(P1, {(0,): {0: (1, 0)}}, 4)
    assert inv * s == s * inv
