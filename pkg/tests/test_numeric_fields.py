import numpy as np
import pytest

from app.core.exceptions import DimensionMismatchError, GeometryError
from app.services.numeric_fields import (
    BoxBump,
    BoxPlateau,
    Bump,
    ConstantField,
    CoordinateField,
    FormFamily,
    SymbolicField,
    contact_strength,
    fd_jacobian,
    smooth_step,
)
from app.services.grammar_service import parse_form
from app.services.symexpr_service import parse_scalar

RNG = np.random.default_rng(7)
POINTS = RNG.uniform(-1.0, 1.0, size=(40, 3))


def test_smooth_step_profile():
    s = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    np.testing.assert_allclose(smooth_step(s), [0.0, 0.0, 0.5, 1.0, 1.0])


@pytest.mark.parametrize(
    "field",
    [
        Bump([0.1, 0.0, -0.2], 0.9),
        Bump([0.0, 0.0, 0.0], 0.9, inner=0.3),
        BoxBump([-0.8, -0.7, -0.9], [0.6, 0.8, 0.7]),
        BoxPlateau([-0.3, -0.3, -0.3], [0.3, 0.3, 0.3], [-0.9, -0.9, -0.9], [0.9, 0.9, 0.9]),
        CoordinateField(3, 1) * Bump([0.0, 0.0, 0.0], 0.8) + 2.0,
    ],
)
def test_gradients_match_finite_differences(field):
    J = fd_jacobian(lambda X: field.value(X)[:, None], POINTS, 1e-6)
    np.testing.assert_allclose(field.gradient(POINTS), J[:, 0, :], atol=1e-6)


def test_plateau_is_one_inside_and_zero_outside():
    plateau = BoxPlateau([-0.3] * 3, [0.3] * 3, [-0.9] * 3, [0.9] * 3)
    np.testing.assert_allclose(plateau.value(np.array([[0.0, 0.2, -0.3], [0.95, 0.0, 0.0]])), [1.0, 0.0])


def test_bump_support():
    bump = Bump([0.0, 0.0, 0.0], 0.5)
    X = np.array([[0.0, 0.0, 0.0], [0.6, 0.0, 0.0]])
    np.testing.assert_allclose(bump.value(X), [1.0, 0.0])
    assert bump.support_mask(X).tolist() == [True, False]


def test_invalid_bumps():
    with pytest.raises(GeometryError):
        Bump([0.0], -1.0)
    with pytest.raises(GeometryError):
        Bump([0.0], 1.0, inner=2.0)
    with pytest.raises(GeometryError):
        BoxBump([1.0], [0.0])


def test_field_dimension_checked():
    with pytest.raises(DimensionMismatchError):
        ConstantField(3, 1.0).value(np.zeros((2, 2)))
    with pytest.raises(DimensionMismatchError):
        ConstantField(3, 1.0) + ConstantField(2, 1.0)


def test_symbolic_field(r3):
    field = SymbolicField(parse_scalar("x*y + z^2", r3))
    X = np.array([[1.0, 2.0, 3.0]])
    np.testing.assert_allclose(field.value(X), [11.0])
    np.testing.assert_allclose(field.gradient(X), [[2.0, 1.0, 6.0]])


def test_contact_strength_of_standard_form(alpha):
    family = FormFamily.constant(alpha)
    strength = contact_strength(family.at(POINTS, 0.0), family.jacobian(POINTS, 0.0))
    np.testing.assert_allclose(strength, 1.0)


def test_contact_strength_vanishes_on_closed_form(r3):
    family = FormFamily.constant(parse_form("d z + d x", r3))
    assert np.all(contact_strength(family.at(POINTS, 0.0), family.jacobian(POINTS, 0.0)) < 1e-12)


def test_form_family_from_time_dependent_form(r3):
    extended = r3.extended("t")
    family = FormFamily.from_form(parse_form("d z + (1 + t)*x*d y", extended), r3)
    np.testing.assert_allclose(family.at(np.array([[2.0, 0.0, 0.0]]), 0.5), [[0.0, 3.0, 1.0]])
    with pytest.raises(GeometryError):
        FormFamily.from_form(parse_form("d z + d t", extended), r3)
