"""
Primitive decomposition of a contact isotopy.

On each time block [t_k, t_{k+1}] the perturbation alpha_t - alpha_{t_k} is
split with a partition of unity subordinate to the cover into primitive
pieces r ds, r = rho^i (alpha_t - alpha_{t_k})_j and s = sigma^i x_j, where
sigma^i is identically 1 around the support of rho^i. The block count is
doubled until every partial sum is contact at every grid node.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import DecompositionError, DimensionMismatchError, GeometryError
from app.models.graded import DifferentialForm
from app.schemas.schemas import GridSpec
from app.services.flow_service import grid_nodes
from app.services.numeric_fields import BoxBump, BoxPlateau, FormFamily, contact_strength, fd_jacobian

logger = logging.getLogger(__name__)

Box = Sequence[Tuple[float, float]]


# ============ PARTITION OF UNITY ============

class CoverPartition:
    """rho^1..rho^I subordinate to the cover boxes plus a background rho^0.

    Each cover box U = [lo, hi] with margin mg (a fraction of its width)
    carries b_i, a box bump on S = [lo + mg, hi - mg]; the background
    b_0 = prod(1 - tau_i) vanishes on the cores [lo + 2mg, hi - 2mg], and
    rho^i = b_i / sum_k b_k. sigma^i is 1 on [lo + mg/2, hi - mg/2] and 0
    outside U.
    """

    def __init__(self, cover: Sequence[Box], margin: float):
        if not 0 < margin < 0.25:
            raise GeometryError(f"Cover margin must lie in (0, 0.25), got {margin}")
        self.cover = [np.asarray(box, dtype=float) for box in cover]
        dims = {box.shape[0] for box in self.cover}
        if len(dims) != 1:
            raise DimensionMismatchError("Cover boxes must share one dimension")
        self.dim = dims.pop()
        self.margin = margin
        self.bumps, self.cores, self.sigmas = [], [], []
        for box in self.cover:
            lo, hi = box[:, 0], box[:, 1]
            if np.any(hi <= lo):
                raise GeometryError(f"Invalid cover box {box.tolist()}")
            mg = margin * (hi - lo)
            self.bumps.append(BoxBump(lo + mg, hi - mg))
            self.cores.append(BoxPlateau(lo + 2 * mg, hi - 2 * mg, lo + mg, hi - mg))
            self.sigmas.append(BoxPlateau(lo + mg / 2, hi - mg / 2, lo, hi))

    def background(self, X: np.ndarray) -> np.ndarray:
        return np.prod([1.0 - core.value(X) for core in self.cores], axis=0)

    def weights(self, X: np.ndarray) -> np.ndarray:
        """(N, I + 1): rho^0 (background) followed by rho^1..rho^I."""
        raw = np.stack([self.background(X)] + [b.value(X) for b in self.bumps], axis=1)
        return raw / raw.sum(axis=1, keepdims=True)

    def rho(self, X: np.ndarray, i: int) -> np.ndarray:
        return self.weights(X)[:, i + 1]

    def s_value(self, X: np.ndarray, i: int, j: int) -> np.ndarray:
        return self.sigmas[i].value(X) * X[:, j]

    def s_gradient(self, X: np.ndarray, i: int, j: int) -> np.ndarray:
        sigma = self.sigmas[i]
        grad = sigma.gradient(X) * X[:, j][:, None]
        grad[:, j] += sigma.value(X)
        return grad


# ============ RESULTS ============

@dataclass(frozen=True)
class PrimitivePair:
    """r = rho^box * (alpha_t - alpha_{t_k})_axis, s = sigma^box * x_axis on block k."""
    block: int
    box: int
    axis: int
    t_start: float


@dataclass
class DecompResult:
    n: int
    times: np.ndarray
    cover: List[np.ndarray]
    partition: CoverPartition = field(repr=False)
    pairs: List[PrimitivePair]
    strengths: List[np.ndarray] = field(repr=False)  # per block: (samples, partial sums, nodes)
    reconstruction_residual: float = 0.0
    partition_residual: float = 0.0

    @property
    def min_strength(self) -> float:
        return float(min((s.min() for s in self.strengths if s.size), default=np.inf))


# ============ DECOMPOSITION ============

def _pair_terms(
    family: FormFamily,
    partition: CoverPartition,
    pairs: Sequence[PrimitivePair],
    X: np.ndarray,
    t: float,
) -> np.ndarray:
    """(P, N, m) coefficient arrays of r ds for every pair at time t."""
    if not pairs:
        return np.zeros((0, X.shape[0], family.dim))
    weights = partition.weights(X)
    terms = []
    for pair in pairs:
        y = family.at(X, t)[:, pair.axis] - family.at(X, pair.t_start)[:, pair.axis]
        r = weights[:, pair.box + 1] * y
        terms.append(r[:, None] * partition.s_gradient(X, pair.box, pair.axis))
    return np.stack(terms)


def _block_pairs(
    family: FormFamily, partition: CoverPartition, nodes: np.ndarray, k: int, t_k: float, samples: np.ndarray
) -> List[PrimitivePair]:
    weights = partition.weights(nodes)
    base = family.at(nodes, t_k)
    pairs = []
    for i in range(len(partition.cover)):
        for j in range(family.dim):
            moved = max(np.max(np.abs(weights[:, i + 1] * (family.at(nodes, t)[:, j] - base[:, j]))) for t in samples)
            if moved > 0:
                pairs.append(PrimitivePair(k, i, j, t_k))
    return pairs


def _partial_strengths(
    family: FormFamily,
    partition: CoverPartition,
    pairs: Sequence[PrimitivePair],
    nodes: np.ndarray,
    t_k: float,
    t: float,
) -> np.ndarray:
    """(P + 1, N) contact strength of alpha_{t_k} + the first p pairs, p = 0..P."""

    def partial_sums(X):
        terms = _pair_terms(family, partition, pairs, X, t)
        sums = family.at(X, t_k)[None] + np.concatenate([np.zeros((1,) + terms.shape[1:]), np.cumsum(terms, axis=0)])
        # stack partial sums along the component axis for one finite difference pass
        return np.concatenate(list(sums), axis=1)

    m = family.dim
    values = partial_sums(nodes)
    J = fd_jacobian(partial_sums, nodes, settings.FD_STEP)
    out = []
    for p in range(len(pairs) + 1):
        cols = slice(p * m, (p + 1) * m)
        out.append(contact_strength(values[:, cols], J[:, cols, :]))
    return np.stack(out)


def _attempt(
    family: FormFamily, partition: CoverPartition, nodes: np.ndarray, times: np.ndarray
) -> Tuple[List[PrimitivePair], List[np.ndarray], Optional[str]]:
    pairs_all, strengths = [], []
    tol = settings.CONTACT_TOL
    for k in range(len(times) - 1):
        t_k, t_next = float(times[k]), float(times[k + 1])
        samples = np.array([t_k, 0.5 * (t_k + t_next), t_next])
        pairs = _block_pairs(family, partition, nodes, k, t_k, samples)
        block = np.stack([_partial_strengths(family, partition, pairs, nodes, t_k, t) for t in samples])
        weak = np.argwhere(block <= tol)
        if len(weak):
            sample, p, node = weak[0]
            return pairs_all, strengths, (
                f"partial sum {p} of block {k} at t = {samples[sample]:.6g} is not contact at node "
                f"{nodes[node].tolist()}"
            )
        pairs_all.extend(pairs)
        strengths.append(block)
    return pairs_all, strengths, None


def _check_cover(family: FormFamily, partition: CoverPartition, nodes: np.ndarray, times: np.ndarray) -> None:
    outside = partition.background(nodes) > 0
    if not np.any(outside):
        return
    base = family.at(nodes[outside], times[0])
    for t in times[1:]:
        drift = np.max(np.abs(family.at(nodes[outside], t) - base), axis=1)
        bad = np.nonzero(drift > 0)[0]
        if len(bad):
            node = nodes[outside][bad[0]].tolist()
            raise DecompositionError(f"Cover does not contain the support of the perturbation: node {node} at t = {t:.6g}")


def primitive_decomposition(
    alpha0: DifferentialForm,
    family: FormFamily,
    cover: Sequence[Box],
    grid: GridSpec,
    margin: float = 0.1,
    max_steps: Optional[int] = None,
    tol: Optional[float] = None,
) -> DecompResult:
    """Split alpha_t - alpha_0 into primitive 1-forms with contact partial sums.

    ``alpha0`` must agree with the family at grid.t0 on the grid nodes up to ``tol``.
    """
    cap = settings.MAX_STEPS if max_steps is None else max_steps
    tol = settings.TOL if tol is None else tol
    m = family.dim
    if alpha0.degree != 1 or alpha0.chart.dim != m or len(grid.bounds) != m:
        raise DimensionMismatchError(f"alpha_0, the family and the grid must live in dimension {m}")
    partition = CoverPartition(cover, margin)
    if partition.dim != m:
        raise DimensionMismatchError(f"Cover boxes have dimension {partition.dim}, expected {m}")
    nodes = grid_nodes(grid)

    start = family.at(nodes, grid.t0)
    if np.max(np.abs(start - alpha0.to_array(nodes))) > tol:
        raise DecompositionError("The family does not start at alpha_0")

    n = 1
    while True:
        times = np.linspace(grid.t0, grid.t1, n + 1)
        if n == 1:
            dense = np.linspace(grid.t0, grid.t1, 9)
            _check_cover(family, partition, nodes, dense)
        pairs, strengths, failure = _attempt(family, partition, nodes, times)
        if failure is None:
            break
        logger.warning(f"n = {n}: {failure}; doubling")
        n *= 2
        if n > cap:
            raise DecompositionError(f"Subdivision exceeded {cap} steps: {failure}")

    reconstruction = 0.0
    for k in range(n):
        t_k = float(times[k])
        block = [pair for pair in pairs if pair.block == k]
        for t in (t_k, 0.5 * (t_k + times[k + 1]), float(times[k + 1])):
            total = family.at(nodes, t_k) + _pair_terms(family, partition, block, nodes, t).sum(axis=0)
            reconstruction = max(reconstruction, float(np.max(np.abs(total - family.at(nodes, t)))))
    partition_residual = float(np.max(np.abs(partition.weights(nodes).sum(axis=1) - 1.0)))
    logger.info(f"decomposition: n = {n}, {len(pairs)} primitive pairs, reconstruction {reconstruction:.3e}")
    return DecompResult(
        n=n,
        times=times,
        cover=partition.cover,
        partition=partition,
        pairs=pairs,
        strengths=strengths,
        reconstruction_residual=reconstruction,
        partition_residual=partition_residual,
    )
