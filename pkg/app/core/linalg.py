"""
Exact and numeric linear algebra helpers.

Exact systems are solved over the chart's rational function field (or over
QQ at rational sample points) with sympy's DomainMatrix row reduction.
Float systems go through numpy with an explicit rank tolerance.
"""
import logging
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from app.core.exceptions import DimensionMismatchError, SingularSystemError
from app.models.scalar import Chart, ScalarField, qq_to_fraction, to_qq

logger = logging.getLogger(__name__)


# ============ EXACT: RATIONAL FUNCTION FIELD ============

def _field_matrix(rows: Sequence[Sequence[ScalarField]], chart: Chart) -> DomainMatrix:
    n = len(rows)
    m = len(rows[0]) if n else 0
    domain = chart.field.to_domain()
    data = [[entry.value for entry in row] for row in rows]
    return DomainMatrix(data, (n, m), domain)


def _entry(matrix: DomainMatrix, i: int, j: int):
    return matrix[i, j].element


def rank_exact(rows: Sequence[Sequence[ScalarField]], chart: Chart) -> int:
    if not rows:
        return 0
    _, pivots = _field_matrix(rows, chart).rref()
    return len(pivots)


def solve_exact(
    rows: Sequence[Sequence[ScalarField]],
    rhs: Sequence[Sequence[ScalarField]],
    chart: Chart,
    what: str = "linear system",
) -> List[List[ScalarField]]:
    """Unique solution X of A X = B over the rational function field.

    ``rhs`` holds one row per equation (several right-hand sides side by side).
    Raises SingularSystemError when the system is inconsistent or underdetermined.
    """
    n_eq = len(rows)
    n_unknown = len(rows[0])
    n_rhs = len(rhs[0])
    if len(rhs) != n_eq:
        raise DimensionMismatchError(f"{what}: {n_eq} equations but {len(rhs)} right-hand sides")
    augmented = [list(rows[k]) + list(rhs[k]) for k in range(n_eq)]
    reduced, pivots = _field_matrix(augmented, chart).rref()
    if any(p >= n_unknown for p in pivots):
        raise SingularSystemError(f"{what} is inconsistent")
    if len(pivots) < n_unknown:
        raise SingularSystemError(
            f"{what} is singular: rank {len(pivots)} < {n_unknown} unknowns"
        )
    solution = [[ScalarField.zero(chart)] * n_rhs for _ in range(n_unknown)]
    for r, col in enumerate(pivots):
        solution[col] = [ScalarField(chart, _entry(reduced, r, n_unknown + c)) for c in range(n_rhs)]
    logger.debug(f"solved {what}: {n_eq}x{n_unknown} with {n_rhs} right-hand sides")
    return solution


def inverse_exact(rows: Sequence[Sequence[ScalarField]], chart: Chart, what: str = "matrix") -> List[List[ScalarField]]:
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DimensionMismatchError(f"{what} is not square")
    identity = [[ScalarField.constant(chart, int(i == j)) for j in range(n)] for i in range(n)]
    return solve_exact(rows, identity, chart, what=f"inverse of {what}")


def evaluate_matrix(rows: Sequence[Sequence[ScalarField]], point) -> list:
    return [[entry.evaluate(point) for entry in row] for row in rows]


# ============ EXACT: RATIONAL NUMBERS ============

def _qq_matrix(rows: Sequence[Sequence[Fraction]], ncols: Optional[int] = None) -> DomainMatrix:
    n = len(rows)
    m = len(rows[0]) if n else (ncols or 0)
    return DomainMatrix([[to_qq(v) for v in row] for row in rows], (n, m), QQ)


def rank_rational(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows or not len(rows[0]):
        return 0
    _, pivots = _qq_matrix(rows).rref()
    return len(pivots)


def nullspace_rational(rows: Sequence[Sequence[Fraction]], ncols: int) -> List[List[Fraction]]:
    """Basis of {v : A v = 0} as rows of Fractions."""
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    reduced, pivots = _qq_matrix(rows).rref()
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, col in enumerate(pivots):
            v[col] = -qq_to_fraction(_entry(reduced, r, f))
        basis.append(v)
    return basis


# ============ NUMERIC ============

def rank_numeric(matrix: np.ndarray, tol: float) -> int:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0
    return int(np.linalg.matrix_rank(matrix, tol=tol))


def nullspace_numeric(matrix: np.ndarray, ncols: int, tol: float) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float).reshape(-1, ncols)
    if matrix.shape[0] == 0:
        return np.eye(ncols)
    _, s, vh = np.linalg.svd(matrix)
    rank = int(np.sum(s > tol))
    return vh[rank:]


# ============ PFAFFIAN ============

def pfaffian(matrix: Sequence[Sequence]):
    """Pfaffian of an antisymmetric matrix by expansion along the first row.

    Works for any ring of entries (ScalarField, Fraction, float). For a
    2k x 2k matrix G the k-th wedge power of sum_{i<j} G_ij e^i ^ e^j has
    top coefficient k! * pfaffian(G).
    """
    n = len(matrix)
    if n == 0:
        return 1
    if n % 2:
        return 0 * matrix[0][0]
    if n == 2:
        return matrix[0][1]
    total = 0 * matrix[0][1]
    rest = list(range(1, n))
    for pos, j in enumerate(rest):
        a = matrix[0][j]
        if a == 0:
            continue
        keep = [k for k in rest if k != j]
        minor = [[matrix[r][c] for c in keep] for r in keep]
        term = a * pfaffian(minor)
        total = total - term if pos % 2 else total + term
    return total
