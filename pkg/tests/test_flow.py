import numpy as np
import pytest

from app.core.exceptions import DimensionMismatchError, FlowBoundsError
from app.schemas.schemas import GridSpec
from app.services.flow_service import (
    RungeKutta4,
    characteristic_transform,
    conformal_factor_check,
    convergence_ratio,
    grid_nodes,
    integrate_contact_flow,
    time_grid,
)
from app.services.numeric_fields import Bump
from app.services.symexpr_service import parse_scalar

SEEDS = np.array([[0.5, 0.2, 0.3], [-0.4, 0.1, -0.2]])


def box(half_width: float, h: float = 0.01, t0: float = 0.0, t1: float = 1.0, nodes: int = 3) -> GridSpec:
    return GridSpec(bounds=[(-half_width, half_width)] * 3, nodes=nodes, t0=t0, t1=t1, h=h)


def test_rk4_exponential():
    times = time_grid(0.0, 1.0, 0.05)
    states = RungeKutta4().integrate(lambda t, y: y, np.array([1.0]), times)
    assert states[-1, 0] == pytest.approx(np.e, rel=1e-6)


def test_grid_nodes_layout():
    nodes = grid_nodes(GridSpec(bounds=[(0, 1), (-1, 1)], nodes=3))
    assert nodes.shape == (9, 2)
    assert nodes[0].tolist() == [0.0, -1.0]
    assert nodes[-1].tolist() == [1.0, 1.0]


def test_reeb_flow(std_contact, r3):
    result = integrate_contact_flow(std_contact, parse_scalar("1", r3), SEEDS, box(3.0))
    expected = SEEDS + np.array([0.0, 0.0, 1.0])
    np.testing.assert_allclose(result.trajectories[:, -1], expected, atol=1e-10)
    np.testing.assert_allclose(result.lam, 1.0)


def test_flow_of_x(std_contact, r3):
    result = integrate_contact_flow(std_contact, parse_scalar("x", r3), SEEDS, box(3.0))
    np.testing.assert_allclose(result.trajectories[:, -1], SEEDS + np.array([0.0, 1.0, 0.0]), atol=1e-10)
    np.testing.assert_allclose(result.lam, 1.0)


def test_flow_of_z(std_contact, r3):
    result = integrate_contact_flow(std_contact, parse_scalar("z", r3), SEEDS, box(3.0))
    e = np.exp(1.0)
    expected = SEEDS * np.array([e, 1.0, e])
    np.testing.assert_allclose(result.trajectories[:, -1], expected, rtol=1e-8)
    np.testing.assert_allclose(result.lam[:, -1], e, rtol=1e-8)
    assert conformal_factor_check(result, std_contact, np.eye(3)) < 1e-6
    assert result.residuals["conformal"] < 1e-6


def test_wrong_conformal_factor_is_detected(std_contact, r3):
    result = integrate_contact_flow(std_contact, parse_scalar("z", r3), SEEDS, box(3.0, h=0.05))
    assert conformal_factor_check(result, std_contact, np.eye(3), lam=1.0) > 0.1
    assert conformal_factor_check(result, std_contact, np.eye(3), lam=np.exp) < 1e-6


def test_time_dependent_hamiltonian(std_contact, r3):
    H = parse_scalar("t*z", r3.extended("t"))
    result = integrate_contact_flow(std_contact, H, SEEDS, box(3.0))
    factor = np.exp(0.5)
    np.testing.assert_allclose(result.trajectories[:, -1, 2], SEEDS[:, 2] * factor, rtol=1e-8)
    np.testing.assert_allclose(result.lam[:, -1], factor, rtol=1e-8)


def test_convergence_order(std_contact, r3):
    H = parse_scalar("z", r3)
    exact = SEEDS[:, 0] * np.exp(1.0)
    errors = []
    for h in (0.1, 0.05):
        result = integrate_contact_flow(std_contact, H, SEEDS, box(3.0, h=h))
        errors.append(np.max(np.abs(result.trajectories[:, -1, 0] - exact)))
    assert convergence_ratio(*errors) > 8


def test_csv_rows(std_contact, r3):
    result = integrate_contact_flow(std_contact, parse_scalar("1", r3), SEEDS[:1], box(3.0, h=0.5))
    rows = list(result.rows())
    assert len(rows) == 3
    assert rows[-1] == pytest.approx([1.0, 0.5, 0.2, 1.3, 1.0])


def test_leaving_the_box(std_contact, r3):
    with pytest.raises(FlowBoundsError):
        integrate_contact_flow(std_contact, parse_scalar("1", r3), SEEDS, box(1.0))


def test_seed_dimension(std_contact, r3):
    with pytest.raises(DimensionMismatchError):
        integrate_contact_flow(std_contact, parse_scalar("1", r3), np.zeros((1, 2)), box(3.0))


# ============ CHARACTERISTIC TRANSFORM ============

def test_characteristic_transform(std_contact):
    H = 0.5 * Bump([0.0, 0.0, 0.0], 0.8)
    grid = box(1.0, h=0.01, t0=-0.2, t1=0.2)
    result = characteristic_transform(std_contact, H, grid)
    zero = int(np.argmin(np.abs(result.times)))
    assert result.times[0] == pytest.approx(-0.2)
    assert result.times[-1] == pytest.approx(0.2)
    np.testing.assert_allclose(result.F[:, zero, :3], result.nodes)
    np.testing.assert_allclose(result.lam[:, zero], 1.0)
    # boundary nodes lie outside the support of H and never move
    corner = np.all(np.abs(result.nodes) == 1.0, axis=1)
    np.testing.assert_allclose(result.F[corner, :, :3], np.repeat(result.nodes[corner][:, None, :], len(result.times), axis=1))
    assert result.f1_residual < 1e-4
    assert result.proportionality_residual < 1e-5


def test_characteristic_window_must_contain_zero(std_contact):
    H = 0.5 * Bump([0.0, 0.0, 0.0], 0.8)
    with pytest.raises(DimensionMismatchError):
        characteristic_transform(std_contact, H, box(1.0, t0=0.1, t1=0.4))


def test_zero_hamiltonian_characteristic_graph(std_contact, r3):
    result = characteristic_transform(std_contact, parse_scalar("0", r3), box(1.0, h=0.05, t0=-0.2, t1=0.2))
    T = len(result.times)
    assert np.array_equal(result.F[:, :, :3], np.repeat(result.nodes[:, None, :], T, axis=1))
    assert np.array_equal(result.Psi[:, :, 3], np.broadcast_to(result.times, (result.nodes.shape[0], T)))
    assert np.all(result.Psi[:, :, 4] == 0)


def test_characteristic_residual_converges_at_fourth_order(std_contact):
    H = 0.5 * Bump([0.0, 0.0, 0.0], 0.8)
    residuals = [
        characteristic_transform(std_contact, H, box(1.0, h=h, t0=-0.2, t1=0.2)).f1_residual for h in (0.01, 0.005)
    ]
    assert convergence_ratio(*residuals) > 8
    assert residuals[1] < 1e-6


def test_transport_from_seeds_on_the_box_boundary(std_contact, r3):
    seeds = np.array([[1.0, 1.0, 1.0], [-1.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
    result = integrate_contact_flow(std_contact, parse_scalar("0", r3), seeds, box(1.0, h=0.1, t1=0.5))
    assert conformal_factor_check(result, std_contact, np.eye(3)) < 1e-9


def test_characteristic_transform_on_boundary_nodes(std_contact):
    H = 0.5 * Bump([0.0, 0.0, 0.0], 0.8)
    result = characteristic_transform(std_contact, H, box(1.0, h=0.02, t0=-0.1, t1=0.1, nodes=5))
    assert np.abs(result.nodes).max() == 1.0
    assert np.isfinite(result.f1_residual)
    assert result.f1_residual < 1e-4
