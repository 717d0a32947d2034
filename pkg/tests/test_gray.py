import numpy as np
import pytest

from app.core.exceptions import DegenerateStructureError, DimensionMismatchError, GeometryError
from app.schemas.schemas import GridSpec
from app.services.gray_service import PerturbationHamiltonian, gray_step
from app.services.numeric_fields import Bump, ConstantField, CoordinateField, fd_jacobian

GRID = GridSpec(bounds=[(-1.0, 1.0)] * 3, nodes=5, h=0.05)


def test_perturbation_hamiltonian_gradient():
    r = 0.5 * Bump([0.0, 0.0, 0.0], 0.9)
    s = 0.2 * CoordinateField(3, 1)
    H = PerturbationHamiltonian(r, s, 0.1, 0.4)
    Y = np.random.default_rng(3).uniform(-0.6, 0.6, size=(30, 4))
    J = fd_jacobian(lambda X: H.value(X)[:, None], Y, 1e-6)
    np.testing.assert_allclose(H.gradient(Y), J[:, 0, :], atol=1e-5)


def test_perturbation_hamiltonian_plateau():
    r = ConstantField(3, 2.0)
    H = PerturbationHamiltonian(r, ConstantField(3, 0.0), 0.1, 0.4)
    Y = np.array([[0.0, 0.0, 0.0, 0.05], [0.0, 0.0, 0.0, 0.5]])
    np.testing.assert_allclose(H.value(Y), [-2.0, 0.0])


def test_invalid_plateau():
    with pytest.raises(DimensionMismatchError):
        PerturbationHamiltonian(ConstantField(3, 1.0), ConstantField(3, 0.0), 0.4, 0.1)


def test_zero_perturbation_is_identity(std_contact):
    result = gray_step(std_contact, ConstantField(3, 0.0), 0.2 * CoordinateField(3, 1), GRID)
    np.testing.assert_allclose(result.f1, result.nodes)
    assert result.conformality_residual < 1e-8
    assert result.locality_residual == 0.0
    assert not result.support_mask.any()


def test_local_perturbation(std_contact):
    r = 1e-3 * Bump([0.0, 0.0, 0.0], 0.6)
    s = 0.2 * CoordinateField(3, 1)
    result = gray_step(std_contact, r, s, GRID)
    assert result.support_mask.sum() == 7
    assert result.conformality_residual < 1e-5
    assert result.locality_residual < 1e-10
    moved = np.abs(result.f1 - result.nodes).max(axis=1)
    assert moved[~result.support_mask].max() == 0.0


def test_large_s_rejected(std_contact):
    with pytest.raises(GeometryError, match="epsilon"):
        gray_step(std_contact, 0.05 * Bump([0.0, 0.0, 0.0], 0.6), CoordinateField(3, 0), GRID)


def test_non_contact_perturbation_rejected(std_contact):
    with pytest.raises(DegenerateStructureError):
        gray_step(std_contact, ConstantField(3, -1.0), CoordinateField(3, 2), GRID)


def test_field_dimensions_checked(std_contact):
    with pytest.raises(DimensionMismatchError):
        gray_step(std_contact, ConstantField(2, 0.0), ConstantField(3, 0.0), GRID)


def test_trivial_step_is_exact(std_contact):
    result = gray_step(std_contact, ConstantField(3, 0.0), ConstantField(3, 0.0), GRID)
    assert np.array_equal(result.f1, result.nodes)


def test_step_on_grid_including_boundary_nodes(std_contact):
    r = 0.05 * Bump([0.0, 0.0, 0.0], 0.6)
    s = 0.2 * CoordinateField(3, 1)
    result = gray_step(std_contact, r, s, GRID)
    boundary = np.any(np.abs(result.nodes) == 1.0, axis=1)
    assert boundary.sum() == 98
    assert np.isfinite(result.f1).all()
    assert result.conformality_residual < 1e-3
    np.testing.assert_array_equal(result.f1[boundary], result.nodes[boundary])
