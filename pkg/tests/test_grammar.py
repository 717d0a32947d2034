import pytest

from app.core.exceptions import ExpressionSyntaxError, UnknownCoordinateError, ZeroFieldDivisionError
from app.models.graded import DifferentialForm, MultiVectorField
from app.models.scalar import ScalarField
from app.services.grammar_service import parse_expression, parse_form, parse_multivector, tokenize


def test_tokenize_positions():
    tokens = tokenize("x + 12*y")
    assert [(t.kind, t.text, t.position) for t in tokens] == [
        ("ident", "x", 0),
        ("op", "+", 2),
        ("int", "12", 4),
        ("op", "*", 6),
        ("ident", "y", 7),
        ("end", "", 8),
    ]


def test_scalar_precedence(r3):
    value = parse_expression("1 + 2*x^2 - y/3", r3)
    x, y = ScalarField.coordinate(r3, 0), ScalarField.coordinate(r3, 1)
    assert value == 1 + 2 * x ** 2 - y / 3


def test_unary_minus_binds_before_power(r3):
    x = ScalarField.coordinate(r3, 0)
    assert parse_expression("-x^2", r3) == -(x ** 2)


def test_negative_power(r3):
    x = ScalarField.coordinate(r3, 0)
    assert parse_expression("x^-2", r3) == 1 / x ** 2


def test_standard_contact_form(r3):
    alpha = parse_form("d z + x*d y", r3)
    assert alpha.degree == 1
    assert alpha.coefficient(1) == ScalarField.coordinate(r3, 0)
    assert alpha.coefficient(2) == 1
    assert alpha.to_text() == "x*d y + d z"


def test_wedge_is_antisymmetric(r3):
    assert parse_form("d y ^ d x", r3) == -parse_form("d x ^ d y", r3)
    assert parse_form("d x ^ d x", r3, degree=2).is_zero()


def test_wedge_power_of_form(r3):
    square = parse_expression("(d x ^ d y)^2", r3)
    assert isinstance(square, DifferentialForm)
    assert square.is_zero()


def test_scalar_wedge_acts_by_multiplication(r3):
    assert parse_form("x ^ d y", r3) == parse_form("x*d y", r3)


def test_multivector(r3):
    Lam = parse_multivector("@x ^ @y - x*@x ^ @z", r3)
    assert isinstance(Lam, MultiVectorField)
    assert Lam.degree == 2
    assert Lam.coefficient(0, 2) == -ScalarField.coordinate(r3, 0)
    assert Lam.to_text() == "@x ^ @y - x*@x ^ @z"


def test_rational_coefficients(r3):
    form = parse_form("1/(1 + x^2)*d y", r3)
    assert form.coefficient(1).to_text() == "1/(x^2 + 1)"


def test_zero_form_with_declared_degree(r3):
    assert parse_form("0", r3, degree=2) == DifferentialForm.zero(r3, 2)


@pytest.mark.parametrize(
    "text, position",
    [
        ("x +", 3),
        ("x y", 2),
        ("(x + y", 6),
        ("x # y", 2),
        ("", 0),
    ],
)
def test_syntax_errors_carry_position(r3, text, position):
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse_expression(text, r3)
    assert exc.value.position == position


def test_unknown_coordinate(r3):
    with pytest.raises(UnknownCoordinateError) as exc:
        parse_expression("x + w", r3)
    assert exc.value.name == "w"
    assert exc.value.position == 4


def test_mixed_degrees_rejected(r3):
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("d x + d x ^ d y", r3)


def test_forms_and_multivectors_do_not_mix(r3):
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("d x ^ @y", r3)


def test_wrong_degree_rejected(r3):
    with pytest.raises(ExpressionSyntaxError):
        parse_form("d x", r3, degree=2)


def test_division_by_zero(r3):
    with pytest.raises(ZeroFieldDivisionError):
        parse_expression("x/(y - y)", r3)


@pytest.mark.parametrize("text, position", [("x^2^3", 3), ("y^-1^2", 4), ("(x + y)^2^2", 9)])
def test_chained_powers_rejected(r3, text, position):
    with pytest.raises(ExpressionSyntaxError, match="Chained powers") as exc:
        parse_expression(text, r3)
    assert exc.value.position == position


def test_powers_bind_tighter_than_wedges(r3):
    x = ScalarField.coordinate(r3, 0)
    assert parse_expression("(x^2)^3", r3) == x ** 6
    assert parse_form("d y ^ x^2", r3) == parse_form("x^2*d y", r3)
    assert parse_expression("d x ^ d x^0", r3) == parse_form("d x", r3)
