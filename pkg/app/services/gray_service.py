"""
One stability step for a primitive perturbation alpha_1 = alpha_0 + r ds.

With H^t(u) = -r(u) rho(t - s(u)) (rho = 1 near 0) and phi_t the flow of
X_{H^t}, the map f_1(u) = phi_{s(u)}^{-1}(u) satisfies
f_1^* alpha_0 = alpha_1 / lambda, and f_1 is the identity away from supp r.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.core.config import settings
from app.core.exceptions import DegenerateStructureError, DimensionMismatchError, GeometryError, TransversalityError
from app.models.structures import ContactData
from app.schemas.schemas import GridSpec
from app.services.flow_service import ContactFlow, RungeKutta4, grid_nodes
from app.services.numeric_fields import NumericField, contact_strength, fd_jacobian, smooth_step, smooth_step_derivative

logger = logging.getLogger(__name__)


class PerturbationHamiltonian(NumericField):
    """H(u, t) = -r(u) rho(t - s(u)) with rho a one-dimensional plateau bump."""

    def __init__(self, r: NumericField, s: NumericField, inner: float, outer: float):
        super().__init__(r.dim + 1)
        if not 0 < inner < outer:
            raise DimensionMismatchError(f"Plateau radii must satisfy 0 < {inner} < {outer}")
        self.r, self.s = r, s
        self.inner, self.outer = inner, outer

    def _split(self, Y):
        Y = self._check(Y)
        return Y[:, :-1], Y[:, -1]

    def _rho(self, x):
        return smooth_step((self.outer - np.abs(x)) / (self.outer - self.inner))

    def _rho_prime(self, x):
        return -np.sign(x) * smooth_step_derivative((self.outer - np.abs(x)) / (self.outer - self.inner)) / (
            self.outer - self.inner
        )

    def value(self, Y):
        U, t = self._split(Y)
        return -self.r.value(U) * self._rho(t - self.s.value(U))

    def gradient(self, Y):
        U, t = self._split(Y)
        shift = t - self.s.value(U)
        r_val, rho, rho_p = self.r.value(U), self._rho(shift), self._rho_prime(shift)
        du = -(self.r.gradient(U) * rho[:, None]) + (r_val * rho_p)[:, None] * self.s.gradient(U)
        dt = -r_val * rho_p
        return np.hstack([du, dt[:, None]])

    def support_mask(self, Y):
        U, _ = self._split(Y)
        return self.r.support_mask(U)


@dataclass
class GrayStepResult:
    nodes: np.ndarray
    f1: np.ndarray
    conformality_residual: float
    locality_residual: float
    support_mask: np.ndarray


def _perturbed_form(C: ContactData, r: NumericField, s: NumericField, X: np.ndarray) -> np.ndarray:
    return C.alpha.to_array(X) + r.value(X)[:, None] * s.gradient(X)


def _inverse_transport(
    flow: ContactFlow, U: np.ndarray, s_vals: np.ndarray, steps: int, bounded: bool = True
) -> np.ndarray:
    """phi_{s(u)}^{-1}(u): integrate d psi / d tau = -s X_{H^{s(1 - tau)}}(psi) over tau in [0, 1]."""
    solver = RungeKutta4()

    def rhs(tau, psi):
        V, _ = flow.evaluate(psi, s_vals * (1.0 - tau))
        return -s_vals[:, None] * V

    taus = np.linspace(0.0, 1.0, steps + 1)
    return solver.integrate(rhs, U, taus, check=flow.check_bounds if bounded else None)[-1]


def gray_step(
    C: ContactData,
    r: NumericField,
    s: NumericField,
    grid: GridSpec,
    epsilon: Optional[float] = None,
) -> GrayStepResult:
    eps = settings.EPSILON if epsilon is None else epsilon
    m = C.chart.dim
    if r.dim != m or s.dim != m:
        raise DimensionMismatchError(f"r and s must be fields on dimension {m}")
    nodes = grid_nodes(grid)
    delta = settings.FD_STEP

    alpha_1 = _perturbed_form(C, r, s, nodes)
    J1 = fd_jacobian(lambda X: _perturbed_form(C, r, s, X), nodes, delta)
    weak = np.nonzero(contact_strength(alpha_1, J1) < settings.CONTACT_TOL)[0]
    if len(weak):
        raise DegenerateStructureError(
            f"alpha_0 + r ds is not contact at {len(weak)} grid nodes", nodes[weak[:10]].tolist()
        )

    s_nodes = s.value(nodes)
    if np.any(np.abs(s_nodes) >= eps):
        raise GeometryError(f"|s| must stay below epsilon = {eps} on the grid")

    H = PerturbationHamiltonian(r, s, settings.PLATEAU_INNER, settings.PLATEAU_OUTER)
    flow = ContactFlow(C, H, grid)
    Y = np.hstack([nodes, s_nodes[:, None]])
    norms = np.sqrt(np.sum(C.alpha.to_array(nodes) ** 2, axis=1) + H.value(Y) ** 2)
    tangent = np.nonzero(norms < settings.CONTACT_TOL)[0]
    if len(tangent):
        raise TransversalityError("Graph of H is tangent to the characteristic kernel", tangent.tolist())

    steps = max(1, int(round(1.0 / grid.h)))

    def f1_of(X: np.ndarray, bounded: bool = False) -> np.ndarray:
        return _inverse_transport(flow, X, s.value(X), steps, bounded)

    f1 = f1_of(nodes, bounded=True)

    # f_1^* alpha_0 = Df_1^T alpha_0(f_1) must be proportional to alpha_1
    Df1 = fd_jacobian(f1_of, nodes, delta)
    pulled = np.einsum("nij,ni->nj", Df1, C.alpha.to_array(f1))
    minors = pulled[:, :, None] * alpha_1[:, None, :] - pulled[:, None, :] * alpha_1[:, :, None]
    conformality = float(np.max(np.abs(minors)))

    mask = r.support_mask(nodes)
    outside = ~mask
    locality = float(np.max(np.abs(f1[outside] - nodes[outside]))) if np.any(outside) else 0.0
    logger.debug(f"gray step: conformality {conformality:.3e}, locality {locality:.3e}")
    return GrayStepResult(nodes, f1, conformality, locality, mask)
