"""
Vectorised numeric scalar fields for the flow laboratory.

Every field maps an (N, dim) array of points to values (N,), gradients
(N, dim) and a support mask (N,) that is False only where the field is
known to vanish identically nearby.
"""
import logging
from abc import ABC, abstractmethod
from typing import Sequence, Union

import numpy as np

from app.core.exceptions import DimensionMismatchError, GeometryError
from app.models.graded import DifferentialForm
from app.models.scalar import Chart, ScalarField

logger = logging.getLogger(__name__)


# ============ SMOOTH PROFILES ============

def _f(s: np.ndarray) -> np.ndarray:
    """exp(-1/s) for s > 0, zero otherwise."""
    out = np.zeros_like(s, dtype=float)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def _df(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s, dtype=float)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos]) / s[pos] ** 2
    return out


def smooth_step(s: np.ndarray) -> np.ndarray:
    """0 for s <= 0, 1 for s >= 1, smooth in between."""
    s = np.asarray(s, dtype=float)
    a, b = _f(s), _f(1.0 - s)
    return a / (a + b)


def smooth_step_derivative(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    a, b = _f(s), _f(1.0 - s)
    da, db = _df(s), -_df(1.0 - s)
    return (da * (a + b) - a * (da + db)) / (a + b) ** 2


def mollifier(u: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1 - u^2)) on |u| < 1: value 1 at 0, compact support."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def mollifier_derivative(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    w = 1.0 - u[inside] ** 2
    out[inside] = np.exp(1.0 - 1.0 / w) * (-2.0 * u[inside] / w ** 2)
    return out


# ============ FIELD ALGEBRA ============

class NumericField(ABC):
    def __init__(self, dim: int):
        self.dim = dim

    @abstractmethod
    def value(self, X: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def gradient(self, X: np.ndarray) -> np.ndarray:
        ...

    def support_mask(self, X: np.ndarray) -> np.ndarray:
        return np.ones(np.atleast_2d(X).shape[0], dtype=bool)

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise DimensionMismatchError(f"Field on dimension {self.dim} evaluated at {X.shape[1]} columns")
        return X

    def __add__(self, other):
        return Sum(self, as_field(other, self.dim))

    __radd__ = __add__

    def __sub__(self, other):
        return Sum(self, Product(ConstantField(self.dim, -1.0), as_field(other, self.dim)))

    def __neg__(self):
        return Product(ConstantField(self.dim, -1.0), self)

    def __mul__(self, other):
        return Product(self, as_field(other, self.dim))

    __rmul__ = __mul__


def as_field(value: Union["NumericField", float, int], dim: int) -> NumericField:
    if isinstance(value, NumericField):
        if value.dim != dim:
            raise DimensionMismatchError(f"Cannot combine fields on dimensions {dim} and {value.dim}")
        return value
    return ConstantField(dim, float(value))


class ConstantField(NumericField):
    def __init__(self, dim: int, c: float):
        super().__init__(dim)
        self.c = float(c)

    def value(self, X):
        X = self._check(X)
        return np.full(X.shape[0], self.c)

    def gradient(self, X):
        X = self._check(X)
        return np.zeros_like(X)

    def support_mask(self, X):
        X = self._check(X)
        return np.full(X.shape[0], self.c != 0.0)


class CoordinateField(NumericField):
    def __init__(self, dim: int, index: int):
        super().__init__(dim)
        if not 0 <= index < dim:
            raise DimensionMismatchError(f"Coordinate {index} out of range for dimension {dim}")
        self.index = index

    def value(self, X):
        return self._check(X)[:, self.index].copy()

    def gradient(self, X):
        X = self._check(X)
        out = np.zeros_like(X)
        out[:, self.index] = 1.0
        return out


class SymbolicField(NumericField):
    """Float evaluation of an exact scalar field."""

    def __init__(self, f: ScalarField):
        super().__init__(f.chart.dim)
        self.f = f
        self._partials = [f.diff(i) for i in range(f.chart.dim)]

    def value(self, X):
        return self.f.evaluate_array(self._check(X))

    def gradient(self, X):
        X = self._check(X)
        return np.stack([p.evaluate_array(X) for p in self._partials], axis=1)

    def support_mask(self, X):
        X = self._check(X)
        return np.full(X.shape[0], not self.f.is_zero())


class Lifted(NumericField):
    """A field on the first ``inner.dim`` coordinates viewed on a larger space."""

    def __init__(self, inner: NumericField, dim: int):
        if dim < inner.dim:
            raise DimensionMismatchError(f"Cannot lift a field on dimension {inner.dim} to {dim}")
        super().__init__(dim)
        self.inner = inner

    def value(self, X):
        return self.inner.value(self._check(X)[:, : self.inner.dim])

    def gradient(self, X):
        X = self._check(X)
        out = np.zeros_like(X)
        out[:, : self.inner.dim] = self.inner.gradient(X[:, : self.inner.dim])
        return out

    def support_mask(self, X):
        return self.inner.support_mask(self._check(X)[:, : self.inner.dim])


class Sum(NumericField):
    def __init__(self, *terms: NumericField):
        super().__init__(terms[0].dim)
        self.terms = terms

    def value(self, X):
        return sum(t.value(X) for t in self.terms)

    def gradient(self, X):
        return sum(t.gradient(X) for t in self.terms)

    def support_mask(self, X):
        return np.logical_or.reduce([t.support_mask(X) for t in self.terms])


class Product(NumericField):
    def __init__(self, left: NumericField, right: NumericField):
        super().__init__(left.dim)
        self.left = left
        self.right = right

    def value(self, X):
        return self.left.value(X) * self.right.value(X)

    def gradient(self, X):
        return (
            self.left.gradient(X) * self.right.value(X)[:, None]
            + self.left.value(X)[:, None] * self.right.gradient(X)
        )

    def support_mask(self, X):
        return self.left.support_mask(X) & self.right.support_mask(X)


# ============ BUMPS ============

class Bump(NumericField):
    """Radial bump of the given radius around ``center``.

    Without ``inner`` it is the normalised mollifier (value 1 at the center).
    With ``inner`` (0 < inner < radius) it is a plateau: identically 1 on the
    ball of radius ``inner`` and 0 outside ``radius``.
    """

    def __init__(self, center: Sequence[float], radius: float, inner: float = None):
        center = np.asarray(center, dtype=float)
        super().__init__(center.shape[0])
        if radius <= 0:
            raise GeometryError(f"Bump radius must be positive, got {radius}")
        if inner is not None and not 0 < inner < radius:
            raise GeometryError(f"Plateau radius {inner} must lie in (0, {radius})")
        self.center = center
        self.radius = float(radius)
        self.inner = inner

    def _offsets(self, X):
        D = self._check(X) - self.center[None, :]
        return D, np.sqrt(np.sum(D ** 2, axis=1))

    def value(self, X):
        _, r = self._offsets(X)
        if self.inner is None:
            return mollifier(r / self.radius)
        return smooth_step((self.radius - r) / (self.radius - self.inner))

    def gradient(self, X):
        D, r = self._offsets(X)
        if self.inner is None:
            u2 = np.sum(D ** 2, axis=1) / self.radius ** 2
            out = np.zeros_like(D)
            inside = u2 < 1
            w = 1.0 - u2[inside]
            b = np.exp(1.0 - 1.0 / w)
            out[inside] = (-b * 2.0 / (self.radius ** 2 * w ** 2))[:, None] * D[inside]
            return out
        width = self.radius - self.inner
        ds = smooth_step_derivative((self.radius - r) / width)
        out = np.zeros_like(D)
        moving = (r > 0) & (ds != 0)
        out[moving] = (-ds[moving] / (width * r[moving]))[:, None] * D[moving]
        return out

    def support_mask(self, X):
        _, r = self._offsets(X)
        return r < self.radius


class BoxBump(NumericField):
    """Product of one-dimensional mollifiers, positive exactly on the open box."""

    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise GeometryError(f"Invalid box {lo.tolist()} .. {hi.tolist()}")
        super().__init__(lo.shape[0])
        self.lo, self.hi = lo, hi

    def _u(self, X):
        X = self._check(X)
        return (2.0 * X - self.lo - self.hi) / (self.hi - self.lo)

    def value(self, X):
        return np.prod(mollifier(self._u(X)), axis=1)

    def gradient(self, X):
        U = self._u(X)
        vals = mollifier(U)
        ders = mollifier_derivative(U) * (2.0 / (self.hi - self.lo))[None, :]
        out = np.empty_like(U)
        for k in range(self.dim):
            others = np.prod(np.delete(vals, k, axis=1), axis=1)
            out[:, k] = ders[:, k] * others
        return out

    def support_mask(self, X):
        return np.all(np.abs(self._u(X)) < 1, axis=1)


class BoxPlateau(NumericField):
    """Identically 1 on the inner box, 0 outside the outer box."""

    def __init__(self, inner_lo, inner_hi, outer_lo, outer_hi):
        self.inner_lo, self.inner_hi = np.asarray(inner_lo, float), np.asarray(inner_hi, float)
        self.outer_lo, self.outer_hi = np.asarray(outer_lo, float), np.asarray(outer_hi, float)
        if np.any(self.outer_lo >= self.inner_lo) or np.any(self.inner_hi >= self.outer_hi):
            raise GeometryError("Plateau inner box must sit strictly inside the outer box")
        if np.any(self.inner_lo > self.inner_hi):
            raise GeometryError("Plateau inner box is empty")
        super().__init__(self.inner_lo.shape[0])

    def _axes(self, X):
        X = self._check(X)
        s_lo = (X - self.outer_lo) / (self.inner_lo - self.outer_lo)
        s_hi = (self.outer_hi - X) / (self.outer_hi - self.inner_hi)
        return s_lo, s_hi

    def value(self, X):
        s_lo, s_hi = self._axes(X)
        return np.prod(smooth_step(s_lo) * smooth_step(s_hi), axis=1)

    def gradient(self, X):
        s_lo, s_hi = self._axes(X)
        a, b = smooth_step(s_lo), smooth_step(s_hi)
        da = smooth_step_derivative(s_lo) / (self.inner_lo - self.outer_lo)
        db = -smooth_step_derivative(s_hi) / (self.outer_hi - self.inner_hi)
        vals = a * b
        ders = da * b + a * db
        out = np.empty_like(vals)
        for k in range(self.dim):
            out[:, k] = ders[:, k] * np.prod(np.delete(vals, k, axis=1), axis=1)
        return out

    def support_mask(self, X):
        X = self._check(X)
        return np.all((X > self.outer_lo) & (X < self.outer_hi), axis=1)


# ============ FORM FAMILIES ============

class FormFamily:
    """Time dependent 1-form alpha_t on a chart of dimension m.

    Components are numeric fields on (x, t), the time being the last column.
    """

    def __init__(self, dim: int, components: Sequence[NumericField]):
        if len(components) != dim:
            raise DimensionMismatchError(f"Form family needs {dim} components, got {len(components)}")
        for c in components:
            if c.dim != dim + 1:
                raise DimensionMismatchError("Form family components must be fields on (x, t)")
        self.dim = dim
        self.components = list(components)

    @classmethod
    def from_form(cls, form: DifferentialForm, chart: Chart) -> "FormFamily":
        """Family from a symbolic 1-form on the chart extended by time (no dt terms)."""
        if form.degree != 1 or form.chart.dim != chart.dim + 1:
            raise DimensionMismatchError("Expected a 1-form on the chart extended by time")
        if not form.coefficient(chart.dim).is_zero():
            raise GeometryError("Form family must not contain a dt term")
        return cls(chart.dim, [SymbolicField(form.coefficient(i)) for i in range(chart.dim)])

    @classmethod
    def constant(cls, form: DifferentialForm) -> "FormFamily":
        dim = form.chart.dim
        return cls(dim, [Lifted(SymbolicField(c), dim + 1) for c in form.components()])

    def plus(self, other: "FormFamily") -> "FormFamily":
        return FormFamily(self.dim, [a + b for a, b in zip(self.components, other.components)])

    def _stack(self, X: np.ndarray, t: float) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.hstack([X, np.full((X.shape[0], 1), float(t))])

    def at(self, X: np.ndarray, t: float) -> np.ndarray:
        Y = self._stack(X, t)
        return np.stack([c.value(Y) for c in self.components], axis=1)

    def jacobian(self, X: np.ndarray, t: float) -> np.ndarray:
        """J[n, i, j] = d alpha_i / d x_j."""
        Y = self._stack(X, t)
        return np.stack([c.gradient(Y)[:, : self.dim] for c in self.components], axis=1)

    def support_mask(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.hstack([X, np.zeros((X.shape[0], 1))])
        return np.logical_or.reduce([c.support_mask(Y) for c in self.components])


# ============ CONTACT STRENGTH ============

def contact_strength(coefficients: np.ndarray, jacobian: np.ndarray) -> np.ndarray:
    """|alpha ^ (d alpha)^n| proxy from the bordered matrix [[0, a^T], [-a, W]].

    W_ij = d_i a_j - d_j a_i. The bordered matrix is antisymmetric of even
    size; its determinant is the square of a Pfaffian proportional to the
    top coefficient, so sqrt|det| vanishes exactly where alpha fails to be
    contact.
    """
    a = np.atleast_2d(coefficients)
    J = np.asarray(jacobian, dtype=float).reshape(a.shape[0], a.shape[1], a.shape[1])
    n, m = a.shape
    W = np.swapaxes(J, 1, 2) - J
    M = np.zeros((n, m + 1, m + 1))
    M[:, 0, 1:] = a
    M[:, 1:, 0] = -a
    M[:, 1:, 1:] = W
    return np.sqrt(np.abs(np.linalg.det(M)))


def fd_jacobian(func, X: np.ndarray, delta: float) -> np.ndarray:
    """J[n, i, j] = d func_i / d x_j by central differences."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = X.shape[1]
    J = None
    for j in range(m):
        e = np.zeros(m)
        e[j] = delta
        column = (func(X + e) - func(X - e)) / (2 * delta)
        if J is None:
            J = np.empty((X.shape[0], column.shape[1], m))
        J[:, :, j] = column
    return J
