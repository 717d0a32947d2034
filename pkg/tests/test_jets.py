from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.exceptions import DimensionMismatchError, GeometryError
from app.models.scalar import Chart, Point
from app.services.extcalc_service import lichnerowicz_d
from app.services.geomstruct_service import two_form_matrix
from app.services.grammar_service import parse_form
from app.services.jet_service import jet_D_bar, jet_D_bar_lift, jet_D_theta, jet_lift, make_jet, one_jet

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@st.composite
def antisymmetric(draw, n: int = 3):
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = draw(fractions)
            rows[i][j], rows[j][i] = v, -v
    return tuple(tuple(r) for r in rows)


def test_one_jet_of_standard_form(r3, alpha):
    J = one_jet(alpha, Point(r3, (1, 2, 3)))
    assert J.a == (0, 1, 1)
    assert J.A[1][0] == 1
    value, b = jet_D_bar(J)
    assert value == J.a
    assert b[0][1] == 1 and b[1][0] == -1 and b[0][2] == 0


def test_symbol_matches_lichnerowicz_differential(r3):
    alpha = parse_form("x*z*d x + y^2*d y + (1 + x)*d z", r3)
    theta = [Fraction(1), Fraction(-2), Fraction(1, 2)]
    p = Point(r3, (1, 2, -1))
    b = jet_D_theta(theta, one_jet(alpha, p))
    exact = lichnerowicz_d(parse_form("d x - 2*d y + 1/2*d z", r3), alpha)
    expected = [[c.evaluate(p) for c in row] for row in two_form_matrix(exact)]
    assert [list(row) for row in b] == expected


@given(antisymmetric(), st.lists(fractions, min_size=3, max_size=3))
def test_lift_is_right_inverse(b, theta):
    J = jet_lift(b, theta)
    assert J.a == (0, 0, 0)
    assert jet_D_theta(theta, J) == b


@given(st.lists(fractions, min_size=3, max_size=3), antisymmetric())
def test_bar_lift_is_right_inverse(a, b):
    assert jet_D_bar(jet_D_bar_lift(a, b)) == (tuple(a), b)


def test_lift_rejects_symmetric_matrix():
    with pytest.raises(GeometryError):
        jet_lift([[0, 1], [1, 0]], [0, 0])


def test_jet_shape():
    with pytest.raises(DimensionMismatchError):
        make_jet([1, 2], [[1, 2]])
    with pytest.raises(DimensionMismatchError):
        jet_D_theta([1], make_jet([1, 2], [[0, 0], [0, 0]]))
