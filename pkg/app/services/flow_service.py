"""
Contact Hamiltonian flows, conformal factors and the characteristic transform.

The state integrated for each seed is (x, l) with l = log(lambda): along the
flow of X_{H^t}, d l / dt = dH^t(R) at the current point, so phi_t^* alpha =
exp(l) alpha.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Union

import numpy as np

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, FlowBoundsError, SingularSystemError, TransversalityError
from app.models.scalar import Point, ScalarField
from app.models.structures import ContactData
from app.schemas.schemas import GridSpec
from app.services.numeric_fields import Lifted, NumericField, SymbolicField

logger = logging.getLogger(__name__)

BOX_SLACK = 1e-12


# ============ INTEGRATOR ============

class RungeKutta4:
    """Classical four stage explicit Runge-Kutta scheme (order 4, fixed step)."""

    def __init__(self):
        #number of stages
        self.s = 4

        #order of the scheme
        self.n = 4

        #intermediate evaluation times
        self.eval_stages = [0.0, 1 / 2, 1 / 2, 1.0]

        #butcher table
        self.BT = {
            0: [1 / 2],
            1: [0.0, 1 / 2],
            2: [0.0, 0.0, 1.0],
        }

        #quadrature weights
        self.weights = [1 / 6, 1 / 3, 1 / 3, 1 / 6]

    def step(self, func: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
        slopes = [func(t, y)]
        for stage in range(1, self.s):
            increment = sum(b * k for b, k in zip(self.BT[stage - 1], slopes) if b)
            slopes.append(func(t + self.eval_stages[stage] * h, y + h * increment))
        return y + h * sum(w * k for w, k in zip(self.weights, slopes))

    def integrate(
        self,
        func: Callable,
        y0: np.ndarray,
        times: np.ndarray,
        check: Optional[Callable[[float, np.ndarray], None]] = None,
    ) -> np.ndarray:
        """States at every entry of ``times`` (increasing or decreasing)."""
        states = np.empty((len(times),) + y0.shape)
        states[0] = y0
        y = y0
        for k in range(len(times) - 1):
            y = self.step(func, times[k], y, times[k + 1] - times[k])
            if check is not None:
                check(times[k + 1], y)
            states[k + 1] = y
        return states


def convergence_ratio(residual_h: float, residual_half: float) -> float:
    """Error reduction when the step is halved (about 16 for a fourth order scheme)."""
    if residual_half == 0:
        return float("inf")
    return residual_h / residual_half


# ============ GRIDS ============

def time_grid(t0: float, t1: float, h: float) -> np.ndarray:
    steps = max(1, int(round(abs(t1 - t0) / h)))
    return np.linspace(t0, t1, steps + 1)


def grid_nodes(grid: GridSpec) -> np.ndarray:
    axes = [np.linspace(lo, hi, grid.nodes) for lo, hi in grid.bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _as_array(seeds: Union[np.ndarray, Sequence[Point]], dim: int) -> np.ndarray:
    if isinstance(seeds, np.ndarray):
        arr = np.atleast_2d(seeds.astype(float))
    else:
        arr = np.array([p.as_array() if isinstance(p, Point) else np.asarray(p, dtype=float) for p in seeds])
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatchError(f"Seeds must be points of dimension {dim}")
    return arr


# ============ CONTACT FLOW ============

def hamiltonian_family(H: Union[ScalarField, NumericField], dim: int) -> NumericField:
    """Time dependent Hamiltonian as a numeric field on (x, t).

    A scalar field on the chart is autonomous; a scalar field on the chart
    extended by time is used as is.
    """
    if isinstance(H, ScalarField):
        if H.chart.dim == dim:
            return Lifted(SymbolicField(H), dim + 1)
        if H.chart.dim == dim + 1:
            return SymbolicField(H)
        raise DimensionMismatchError(f"Hamiltonian on {H.chart} does not fit dimension {dim}")
    if H.dim == dim:
        return Lifted(H, dim + 1)
    if H.dim != dim + 1:
        raise DimensionMismatchError(f"Hamiltonian on dimension {H.dim} does not fit dimension {dim}")
    return H


class ContactFlow:
    """Numeric vector field X_{H^t} of a certified contact form."""

    def __init__(self, C: ContactData, H: Union[ScalarField, NumericField], grid: Optional[GridSpec] = None):
        self.C = C
        self.dim = C.chart.dim
        self.H = hamiltonian_family(H, self.dim)
        self.grid = grid
        self.solver = RungeKutta4()
        if grid is not None and len(grid.bounds) != self.dim:
            raise DimensionMismatchError(f"Grid has {len(grid.bounds)} axes, chart has dimension {self.dim}")

    def _stacked(self, X: np.ndarray, t) -> np.ndarray:
        times = np.broadcast_to(np.asarray(t, dtype=float), (X.shape[0],))
        return np.hstack([X, times[:, None]])

    def evaluate(self, X: np.ndarray, t) -> tuple:
        """(X_{H^t}, dH^t(R)) at the rows of X; ``t`` is a scalar or one time per row."""
        C = self.C
        a = C.alpha.to_array(X)
        W = C.d_alpha.to_array(X)
        R = C.reeb.to_array(X)
        Y = self._stacked(X, t)
        h = self.H.value(Y)
        dh = self.H.gradient(Y)[:, : self.dim]
        dh_R = np.einsum("ni,ni->n", dh, R)
        Phi = np.swapaxes(W, 1, 2) + a[:, :, None] * a[:, None, :]
        rhs = -dh + (dh_R + h)[:, None] * a
        try:
            V = np.linalg.solve(Phi, rhs[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"phi is singular along the flow: {exc}")
        return V, dh_R

    def rhs(self, t, state: np.ndarray) -> np.ndarray:
        V, dh_R = self.evaluate(state[:, : self.dim], t)
        return np.hstack([V, dh_R[:, None]])

    def check_bounds(self, t: float, state: np.ndarray) -> None:
        if self.grid is None:
            return
        X = state[:, : self.dim]
        lo = np.array([b[0] for b in self.grid.bounds]) - BOX_SLACK
        hi = np.array([b[1] for b in self.grid.bounds]) + BOX_SLACK
        outside = np.nonzero(np.any((X < lo) | (X > hi), axis=1))[0]
        if len(outside):
            raise FlowBoundsError(f"Trajectories {outside[:10].tolist()} left the box at t = {t:.6g}")

    def run(self, seeds: np.ndarray, times: np.ndarray, bounded: bool = True) -> np.ndarray:
        """States (T, S, dim + 1) with the log conformal factor in the last column.

        ``bounded=False`` skips the grid box check; finite difference copies of
        boundary nodes start just outside the box.
        """
        state = np.hstack([seeds, np.zeros((seeds.shape[0], 1))])
        check = self.check_bounds if bounded else None
        return self.solver.integrate(self.rhs, state, times, check=check)


@dataclass
class FlowResult:
    coords: tuple
    times: np.ndarray
    seeds: np.ndarray
    trajectories: np.ndarray  # (S, T, dim)
    log_lambda: np.ndarray  # (S, T)
    flow: ContactFlow = field(repr=False)
    residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def lam(self) -> np.ndarray:
        return np.exp(self.log_lambda)

    def rows(self):
        """CSV rows (t, coords..., lambda), seeds concatenated in order."""
        for s in range(self.seeds.shape[0]):
            for k, t in enumerate(self.times):
                yield [float(t), *self.trajectories[s, k].tolist(), float(self.lam[s, k])]


def integrate_contact_flow(
    C: ContactData,
    H: Union[ScalarField, NumericField],
    seeds: Union[np.ndarray, Sequence[Point]],
    grid: GridSpec,
) -> FlowResult:
    flow = ContactFlow(C, H, grid)
    X0 = _as_array(seeds, flow.dim)
    times = time_grid(grid.t0, grid.t1, grid.h)
    states = flow.run(X0, times)
    logger.debug(f"integrated {X0.shape[0]} seeds over {len(times) - 1} steps")
    return FlowResult(
        coords=C.chart.coords,
        times=times,
        seeds=X0,
        trajectories=np.transpose(states[:, :, : flow.dim], (1, 0, 2)),
        log_lambda=states[:, :, flow.dim].T,
        flow=flow,
    )


# ============ CONFORMAL FACTOR ============

def _transport(flow: ContactFlow, seeds: np.ndarray, tangents: np.ndarray, times: np.ndarray) -> np.ndarray:
    """D phi_t v by central differences: (S, P, T, dim)."""
    delta = settings.FD_STEP
    S, P, m = seeds.shape[0], tangents.shape[0], flow.dim
    plus = (seeds[:, None, :] + delta * tangents[None, :, :]).reshape(-1, m)
    minus = (seeds[:, None, :] - delta * tangents[None, :, :]).reshape(-1, m)
    states = flow.run(np.vstack([plus, minus]), times, bounded=False)[:, :, :m]
    half = S * P
    diff = (states[:, :half] - states[:, half:]) / (2 * delta)
    return np.transpose(diff.reshape(len(times), S, P, m), (1, 2, 0, 3))


def conformal_factor_check(
    result: FlowResult,
    C: ContactData,
    tangents: Sequence[Sequence[float]],
    lam: Optional[Union[float, Callable[[np.ndarray], np.ndarray]]] = None,
) -> float:
    """max |alpha_{phi_t(p)}(D phi_t v) - lambda_t alpha_p(v)| over seeds, tangent vectors and times.

    ``lam`` overrides the recorded conformal factor (a constant or a function of t).
    """
    tangents = np.atleast_2d(np.asarray(tangents, dtype=float))
    if tangents.shape[1] != C.chart.dim:
        raise DimensionMismatchError(f"Tangent vectors must have {C.chart.dim} components")
    moved = _transport(result.flow, result.seeds, tangents, result.times)
    S, P, T, m = moved.shape
    alpha_moved = C.alpha.to_array(result.trajectories.reshape(-1, m)).reshape(S, T, m)
    lhs = np.einsum("stm,sptm->spt", alpha_moved, moved)
    alpha_seed = C.alpha.to_array(result.seeds)
    base = np.einsum("sm,pm->sp", alpha_seed, tangents)
    if lam is None:
        factor = result.lam
    elif callable(lam):
        factor = np.broadcast_to(np.asarray(lam(result.times), dtype=float), (S, T))
    else:
        factor = np.full((S, T), float(lam))
    residual = float(np.max(np.abs(lhs - factor[:, None, :] * base[:, :, None])))
    result.residuals["conformal"] = residual
    return residual


# ============ CHARACTERISTIC TRANSFORM ============

@dataclass
class CharacteristicResult:
    times: np.ndarray
    nodes: np.ndarray
    F: np.ndarray  # (N, T, dim + 1): (phi_t(u), t)
    Psi: np.ndarray  # (N, T, dim + 2): (phi_t(u), t, H(phi_t(u), t))
    lam: np.ndarray  # (N, T)
    f1_residual: float
    proportionality_residual: float


def _five_point(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth order central derivative along axis 1 at interior samples 2..T-3."""
    return (-values[:, 4:] + 8 * values[:, 3:-1] - 8 * values[:, 1:-3] + values[:, :-4]) / (12 * h)


def _f1_residual(C: ContactData, flow: ContactFlow, states: np.ndarray, times: np.ndarray) -> float:
    """max |alpha(d phi_t / dt) - H^t(phi_t)| on one integration branch."""
    if len(times) < 5:
        return 0.0
    m = flow.dim
    traj = np.transpose(states[:, :, :m], (1, 0, 2))
    N, T = traj.shape[0], traj.shape[1]
    h = float(times[1] - times[0])
    velocity = _five_point(traj, h)
    inner = traj[:, 2:-2].reshape(-1, m)
    alpha_traj = C.alpha.to_array(inner).reshape(N, T - 4, m)
    t_inner = np.broadcast_to(times[None, 2:-2], (N, T - 4)).reshape(-1)
    H_inner = flow.H.value(np.hstack([inner, t_inner[:, None]])).reshape(N, T - 4)
    return float(np.max(np.abs(np.einsum("ntm,ntm->nt", alpha_traj, velocity) - H_inner)))


def _proportionality_residual(C: ContactData, flow: ContactFlow, nodes: np.ndarray, states: np.ndarray, times: np.ndarray) -> float:
    """Largest 2x2 minor between alpha_phi(D phi_t e_i) and alpha_u(e_i)."""
    if len(times) < 2:
        return 0.0
    m = flow.dim
    moved = _transport(flow, nodes, np.eye(m), times)  # (N, m, T, m)
    T, N = states.shape[0], states.shape[1]
    alpha_moved = C.alpha.to_array(states[:, :, :m].reshape(-1, m)).reshape(T, N, m)
    b = np.einsum("tnm,nptm->ntp", alpha_moved, moved)
    a = C.alpha.to_array(nodes)[:, None, :]
    minors = b[:, :, :, None] * a[:, :, None, :] - b[:, :, None, :] * a[:, :, :, None]
    return float(np.max(np.abs(minors)))


def characteristic_transform(
    C: ContactData,
    H: Union[ScalarField, NumericField],
    grid: GridSpec,
    epsilon: Optional[float] = None,
) -> CharacteristicResult:
    """F(u, t) = (phi_t(u), t) and Psi = (F, H o F) on the grid nodes for t in (-eps, eps).

    Aborts with TransversalityError when the graph of H is tangent to
    ker(alpha - y dt), i.e. where the covector (alpha, -H) vanishes.
    """
    eps = settings.EPSILON if epsilon is None else epsilon
    flow = ContactFlow(C, H, grid)
    m = flow.dim
    nodes = grid_nodes(grid)
    t_lo, t_hi = max(grid.t0, -eps), min(grid.t1, eps)
    if not t_lo <= 0 <= t_hi or t_hi <= t_lo:
        raise DimensionMismatchError(f"Time window [{t_lo}, {t_hi}] must contain 0 and lie in (-{eps}, {eps})")

    start = np.hstack([nodes, np.zeros((nodes.shape[0], 1))])
    forward = time_grid(0.0, t_hi, grid.h) if t_hi > 0 else np.array([0.0])
    backward = time_grid(0.0, t_lo, grid.h) if t_lo < 0 else np.array([0.0])
    state_f = flow.run(nodes, forward) if len(forward) > 1 else start[None]
    state_b = flow.run(nodes, backward) if len(backward) > 1 else start[None]
    times = np.concatenate([backward[::-1], forward[1:]])
    states = np.concatenate([state_b[::-1], state_f[1:]], axis=0)  # (T, N, m + 1)

    traj = np.transpose(states[:, :, :m], (1, 0, 2))
    N, T = traj.shape[0], traj.shape[1]
    time_col = np.broadcast_to(times[None, :, None], (N, T, 1))
    F = np.concatenate([traj, time_col], axis=2)
    H_vals = flow.H.value(F.reshape(-1, m + 1)).reshape(N, T)
    Psi = np.concatenate([F, H_vals[:, :, None]], axis=2)

    alpha_vals = C.alpha.to_array(traj.reshape(-1, m)).reshape(N, T, m)
    norms = np.sqrt(np.sum(alpha_vals ** 2, axis=2) + H_vals ** 2)
    tangent = np.nonzero(np.any(norms < settings.CONTACT_TOL, axis=1))[0]
    if len(tangent):
        raise TransversalityError(
            f"Graph of H is tangent to the characteristic kernel at {len(tangent)} nodes", tangent.tolist()
        )

    f1 = max(_f1_residual(C, flow, state_f, forward), _f1_residual(C, flow, state_b, backward))
    prop = max(
        _proportionality_residual(C, flow, nodes, state_f, forward),
        _proportionality_residual(C, flow, nodes, state_b, backward),
    )
    logger.debug(f"characteristic transform: F1 residual {f1:.3e}, proportionality {prop:.3e}")
    return CharacteristicResult(
        times=times,
        nodes=nodes,
        F=F,
        Psi=Psi,
        lam=np.exp(states[:, :, m].T),
        f1_residual=f1,
        proportionality_residual=prop,
    )
