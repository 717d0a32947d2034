"""
Graded objects on a chart: differential forms, multivector fields and
polynomial maps between charts.

Coefficients are keyed by strictly increasing index tuples. Zero terms are
never stored, so a zero object is an empty map of the right degree.
"""
from __future__ import annotations

from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterator, Mapping, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import ChartMismatchError, DimensionMismatchError, GeometryError
from app.models.scalar import Chart, Exact, Point, ScalarField, format_scalar

Index = Tuple[int, ...]


def merge_sign(left: Index, right: Index) -> Tuple[int, Index]:
    """Sign and sorted index of e_left ^ e_right; sign 0 when they overlap."""
    if set(left) & set(right):
        return 0, ()
    inversions = sum(1 for i in left for j in right if i > j)
    return (-1 if inversions % 2 else 1), tuple(sorted(left + right))


class GradedField:
    """Common algebra of forms and multivectors (exterior algebra over scalars)."""

    kind = "graded"
    basis_symbol = "?"

    def __init__(self, chart: Chart, degree: int, coeffs: Mapping[Index, ScalarField] = None):
        if degree < 0:
            raise DimensionMismatchError(f"Negative degree {degree}")
        if degree > chart.dim:
            raise DimensionMismatchError(f"Degree {degree} exceeds chart dimension {chart.dim}")
        clean: Dict[Index, ScalarField] = {}
        for idx, c in (coeffs or {}).items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise DimensionMismatchError(f"Index {idx} does not have length {degree}")
            if any(a >= b for a, b in zip(idx, idx[1:])):
                raise GeometryError(f"Index {idx} is not strictly increasing")
            if any(not 0 <= i < chart.dim for i in idx):
                raise DimensionMismatchError(f"Index {idx} out of range for {chart}")
            if not isinstance(c, ScalarField):
                c = ScalarField.constant(chart, c)
            chart.require_same(c.chart)
            if not c.is_zero():
                clean[idx] = c
        self.chart = chart
        self.degree = degree
        self._coeffs = MappingProxyType(dict(sorted(clean.items())))

    @classmethod
    def _from_raw(cls, chart: Chart, degree: int, raw: Mapping[Index, object]):
        """Wrap raw sympy field elements accumulated by an operation."""
        return cls(chart, degree, {k: ScalarField(chart, v) for k, v in raw.items() if v})

    # ---- constructors ----

    @classmethod
    def zero(cls, chart: Chart, degree: int):
        return cls(chart, degree, {})

    @classmethod
    def scalar(cls, f: ScalarField):
        return cls(f.chart, 0, {(): f})

    @classmethod
    def basis(cls, chart: Chart, *indices: int):
        sign, idx = merge_sign((), tuple(indices[:1]))
        for i in indices[1:]:
            s, idx = merge_sign(idx, (i,))
            sign *= s
        if sign == 0:
            return cls.zero(chart, len(indices))
        return cls(chart, len(indices), {idx: ScalarField.constant(chart, sign)})

    @classmethod
    def from_components(cls, components: Sequence[ScalarField]):
        """Degree-one object from one coefficient per coordinate."""
        chart = components[0].chart
        if len(components) != chart.dim:
            raise DimensionMismatchError(f"Expected {chart.dim} components, got {len(components)}")
        return cls(chart, 1, {(i,): c for i, c in enumerate(components)})

    # ---- access ----

    @property
    def coeffs(self) -> Mapping[Index, ScalarField]:
        return self._coeffs

    def coefficient(self, *idx: int) -> ScalarField:
        return self._coeffs.get(tuple(idx), ScalarField.zero(self.chart))

    def components(self) -> list[ScalarField]:
        """Coefficients of a degree-one object, one per coordinate."""
        if self.degree != 1:
            raise DimensionMismatchError(f"components() needs degree 1, got {self.degree}")
        return [self.coefficient(i) for i in range(self.chart.dim)]

    def scalar_part(self) -> ScalarField:
        if self.degree != 0:
            raise DimensionMismatchError(f"Degree {self.degree} object is not a scalar")
        return self.coefficient()

    def terms(self) -> Iterator[Tuple[Index, ScalarField]]:
        return iter(self._coeffs.items())

    def is_zero(self) -> bool:
        return not self._coeffs

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __len__(self) -> int:
        return len(self._coeffs)

    # ---- comparison ----

    def _check_compatible(self, other: "GradedField") -> None:
        if type(other) is not type(self):
            raise ChartMismatchError(f"Cannot combine {self.kind} with {getattr(other, 'kind', type(other).__name__)}")
        self.chart.require_same(other.chart)

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.degree == other.degree
            and dict(self._coeffs) == dict(other._coeffs)
        )

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.chart, self.degree, tuple(self._coeffs.items())))

    # ---- linear structure ----

    def __add__(self, other):
        self._check_compatible(other)
        # zero objects past the top degree carry a clipped degree
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.degree != other.degree:
            raise DimensionMismatchError(f"Cannot add degrees {self.degree} and {other.degree}")
        raw = {k: v.value for k, v in self._coeffs.items()}
        for k, v in other._coeffs.items():
            raw[k] = raw[k] + v.value if k in raw else v.value
        return self._from_raw(self.chart, self.degree, raw)

    def __neg__(self):
        return type(self)(self.chart, self.degree, {k: -v for k, v in self._coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f: Union[ScalarField, Exact]):
        if not isinstance(f, ScalarField):
            f = ScalarField.constant(self.chart, f)
        self.chart.require_same(f.chart)
        return type(self)(self.chart, self.degree, {k: f * v for k, v in self._coeffs.items()})

    def __rmul__(self, f):
        if isinstance(f, (ScalarField, int, Fraction)):
            return self.scale(f)
        return NotImplemented

    # ---- exterior product ----

    def wedge(self, other):
        self._check_compatible(other)
        degree = self.degree + other.degree
        if degree > self.chart.dim:
            return self.zero(self.chart, min(degree, self.chart.dim))
        raw: Dict[Index, object] = {}
        for i, a in self._coeffs.items():
            for j, b in other._coeffs.items():
                sign, k = merge_sign(i, j)
                if not sign:
                    continue
                term = a.value * b.value
                if sign < 0:
                    term = -term
                raw[k] = raw[k] + term if k in raw else term
        return self._from_raw(self.chart, degree, raw)

    def __xor__(self, other):
        return self.wedge(other)

    # ---- numerics ----

    def to_array(self, points: np.ndarray) -> np.ndarray:
        """Float coefficients at the rows of ``points``: (N,) / (N, m) / (N, m, m) by degree."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n, m = points.shape[0], self.chart.dim
        if self.degree == 0:
            return self.coefficient().evaluate_array(points)
        if self.degree == 1:
            out = np.zeros((n, m))
            for (i,), c in self._coeffs.items():
                out[:, i] = c.evaluate_array(points)
            return out
        if self.degree == 2:
            out = np.zeros((n, m, m))
            for (i, j), c in self._coeffs.items():
                v = c.evaluate_array(points)
                out[:, i, j] = v
                out[:, j, i] = -v
            return out
        raise DimensionMismatchError(f"to_array supports degrees 0-2, got {self.degree}")

    # ---- text ----

    def basis_text(self, idx: Index) -> str:
        return " ^ ".join(self.basis_symbol.format(self.chart.coords[i]) for i in idx)

    def to_text(self) -> str:
        if self.degree == 0:
            return format_scalar(self.coefficient())
        if self.is_zero():
            return "0"
        out = ""
        for k, (idx, c) in enumerate(self._coeffs.items()):
            negative = False
            single = c.is_polynomial() and len(c.numer.terms()) == 1
            if single and c.numer.LC < 0:
                negative, c = True, -c
            basis = self.basis_text(idx)
            if c == 1:
                body = basis
            elif single:
                body = f"{format_scalar(c)}*{basis}"
            else:
                body = f"({format_scalar(c)})*{basis}"
            if k == 0:
                out = f"-{body}" if negative else body
            else:
                out += f" - {body}" if negative else f" + {body}"
        return out

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_text()!r}, degree={self.degree})"


class DifferentialForm(GradedField):
    kind = "form"
    basis_symbol = "d {}"


class MultiVectorField(GradedField):
    kind = "multivector"
    basis_symbol = "@{}"


# ============ POLYNOMIAL MAPS ============

class PolyMap:
    """Map between charts given by one rational component per target coordinate."""

    def __init__(self, source: Chart, target: Chart, components: Sequence[ScalarField]):
        components = tuple(components)
        if len(components) != target.dim:
            raise DimensionMismatchError(
                f"Map to {target} needs {target.dim} components, got {len(components)}"
            )
        for c in components:
            source.require_same(c.chart)
        self.source = source
        self.target = target
        self.components = components

    @classmethod
    def identity(cls, chart: Chart) -> "PolyMap":
        return cls(chart, chart, [ScalarField.coordinate(chart, i) for i in range(chart.dim)])

    def compose(self, inner: "PolyMap") -> "PolyMap":
        """self ∘ inner."""
        self.source.require_same(inner.target)
        return PolyMap(inner.source, self.target, [c.compose(inner.components) for c in self.components])

    def jacobian(self) -> list[list[ScalarField]]:
        """Row i holds the partial derivatives of component i."""
        return [[c.diff(j) for j in range(self.source.dim)] for c in self.components]

    def __call__(self, point: Point) -> Point:
        self.source.require_same(point.chart)
        return Point(self.target, tuple(c.evaluate(point) for c in self.components))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyMap):
            return NotImplemented
        return self.source == other.source and self.target == other.target and self.components == other.components

    def __hash__(self) -> int:
        return hash((self.source, self.target, self.components))

    def __repr__(self) -> str:
        body = ", ".join(format_scalar(c) for c in self.components)
        return f"PolyMap({self.source.coords} -> {self.target.coords}: ({body}))"
