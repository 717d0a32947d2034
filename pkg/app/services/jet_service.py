"""
First-order jets of 1-forms at a point and the symbol maps on them.

A jet is (a_i, a_ij) with a_i = alpha_i(x0) and a_ij = d alpha_i / d x_j (x0).
Antisymmetric matrices stand for the 2-form sum_{i<j} b_ij dx_i ^ dx_j.
"""
import logging
from fractions import Fraction
from typing import Sequence, Tuple

from app.core.exceptions import DimensionMismatchError, GeometryError
from app.models.graded import DifferentialForm
from app.models.scalar import Number, Point
from app.models.structures import JetPoint

logger = logging.getLogger(__name__)

SquareMatrix = Tuple[Tuple[Number, ...], ...]


def make_jet(a: Sequence[Number], A: Sequence[Sequence[Number]]) -> JetPoint:
    n = len(a)
    if len(A) != n or any(len(row) != n for row in A):
        raise DimensionMismatchError(f"Jet with {n} values needs an {n}x{n} derivative matrix")
    return JetPoint(tuple(a), tuple(tuple(row) for row in A))


def _require_antisymmetric(b: Sequence[Sequence[Number]]) -> int:
    n = len(b)
    if any(len(row) != n for row in b):
        raise DimensionMismatchError("Expected a square matrix")
    for i in range(n):
        for j in range(i, n):
            if b[i][j] != -b[j][i]:
                raise GeometryError(f"Matrix is not antisymmetric at ({i}, {j})")
    return n


def _antisymmetric(n: int, upper) -> SquareMatrix:
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = upper(i, j)
            rows[i][j] = v
            rows[j][i] = -v
    return tuple(tuple(r) for r in rows)


def jet_D_theta(theta: Sequence[Number], J: JetPoint) -> SquareMatrix:
    """Symbol of d_theta: b_ij = (a_ji - a_ij) + (theta_i a_j - a_i theta_j)."""
    n = J.dim
    if len(theta) != n:
        raise DimensionMismatchError(f"theta has {len(theta)} components, jet has dimension {n}")
    a, A = J.a, J.A
    return _antisymmetric(n, lambda i, j: (A[j][i] - A[i][j]) + (theta[i] * a[j] - a[i] * theta[j]))


def jet_D_bar(J: JetPoint) -> Tuple[Tuple[Number, ...], SquareMatrix]:
    """(alpha(x0), d alpha(x0)) read off the jet."""
    A = J.A
    return J.a, _antisymmetric(J.dim, lambda i, j: A[j][i] - A[i][j])


def jet_lift(b: Sequence[Sequence[Number]], theta: Sequence[Number]) -> JetPoint:
    """Right inverse of jet_D_theta: a = 0 and A = -b / 2."""
    n = _require_antisymmetric(b)
    if len(theta) != n:
        raise DimensionMismatchError(f"theta has {len(theta)} components, matrix has size {n}")
    return jet_D_bar_lift([Fraction(0)] * n, b)


def jet_D_bar_lift(a: Sequence[Number], b: Sequence[Sequence[Number]]) -> JetPoint:
    """Jet with value a whose D_bar image is (a, b)."""
    n = _require_antisymmetric(b)
    if len(a) != n:
        raise DimensionMismatchError(f"Value has {len(a)} components, matrix has size {n}")
    half = Fraction(1, 2)
    A = [[-b[i][j] * half for j in range(n)] for i in range(n)]
    return make_jet(list(a), A)


def one_jet(alpha: DifferentialForm, point: Point) -> JetPoint:
    if alpha.degree != 1:
        raise DimensionMismatchError("one_jet needs a 1-form")
    comps = alpha.components()
    a = [c.evaluate(point) for c in comps]
    A = [[c.diff(j).evaluate(point) for j in range(alpha.chart.dim)] for c in comps]
    return make_jet(a, A)
