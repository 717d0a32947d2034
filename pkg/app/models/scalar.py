"""
Charts, points and exact scalar fields.

A ScalarField is a rational function of the chart coordinates with rational
coefficients. The backing value is a sympy ``FracElement`` kept in canonical
form: numerator and denominator coprime, denominator monic under graded-lex
order. With that normal form structural equality decides equality.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from sympy import Symbol
from sympy.polys.domains import QQ
from sympy.polys.fields import FracElement, FracField
from sympy.polys.orderings import grlex

from app.core.exceptions import (
    ChartMismatchError,
    DimensionMismatchError,
    GeometryError,
    PoleError,
    ZeroFieldDivisionError,
)

Number = Union[int, Fraction, float]
Exact = Union[int, Fraction]

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
RESERVED_NAMES = frozenset({"d"})


def to_qq(value: Exact):
    """Convert an int or Fraction to a sympy QQ element."""
    value = Fraction(value)
    return QQ(value.numerator, value.denominator)


def qq_to_fraction(value) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))


def qq_to_float(value) -> float:
    return int(value.numerator) / int(value.denominator)


# ============ CHART ============

@dataclass(frozen=True)
class Chart:
    """Ordered coordinate names of a local chart."""

    coords: tuple[str, ...]

    def __post_init__(self):
        coords = tuple(self.coords)
        object.__setattr__(self, "coords", coords)
        if not coords:
            raise GeometryError("A chart needs at least one coordinate")
        if len(set(coords)) != len(coords):
            raise GeometryError(f"Duplicate coordinate names in chart {coords}")
        for name in coords:
            if not _IDENT.match(name) or name in RESERVED_NAMES:
                raise GeometryError(f"Invalid coordinate name '{name}'")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @cached_property
    def field(self) -> FracField:
        return FracField(tuple(Symbol(c) for c in self.coords), QQ, grlex)

    def index(self, name: str) -> int:
        return self.coords.index(name)

    def extended(self, name: str) -> "Chart":
        """Chart with one more coordinate appended (e.g. time)."""
        return Chart(self.coords + (name,))

    def require_same(self, other: "Chart") -> None:
        if self != other:
            raise ChartMismatchError(f"Chart mismatch: {self.coords} vs {other.coords}")

    def __str__(self) -> str:
        return f"Chart({', '.join(self.coords)})"


# ============ POINT ============

@dataclass(frozen=True)
class Point:
    chart: Chart
    values: tuple

    def __post_init__(self):
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        if len(values) != self.chart.dim:
            raise DimensionMismatchError(
                f"Point has {len(values)} values but chart has dimension {self.chart.dim}"
            )

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in self.values)

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values], dtype=float)

    def to_json(self) -> list:
        return [str(v) if isinstance(v, Fraction) else v for v in self.values]


# ============ SCALAR FIELD ============

def _canonical(value: FracElement) -> FracElement:
    lc = value.denom.LC
    if lc == 1:
        return value
    return value.raw_new(value.numer.quo_ground(lc), value.denom.quo_ground(lc))


class ScalarField:
    """Immutable rational function on a chart."""

    def __init__(self, chart: Chart, value: FracElement):
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "value", _canonical(value))

    def __setattr__(self, key, val):
        raise AttributeError("ScalarField is immutable")

    # ---- constructors ----

    @classmethod
    def constant(cls, chart: Chart, c: Exact) -> "ScalarField":
        return cls(chart, chart.field.ground_new(to_qq(c)))

    @classmethod
    def zero(cls, chart: Chart) -> "ScalarField":
        return cls(chart, chart.field.zero)

    @classmethod
    def one(cls, chart: Chart) -> "ScalarField":
        return cls(chart, chart.field.one)

    @classmethod
    def coordinate(cls, chart: Chart, i: int) -> "ScalarField":
        if not 0 <= i < chart.dim:
            raise DimensionMismatchError(f"Coordinate index {i} out of range for {chart}")
        return cls(chart, chart.field.gens[i])

    # ---- structure ----

    @property
    def numer(self):
        return self.value.numer

    @property
    def denom(self):
        return self.value.denom

    def is_zero(self) -> bool:
        return not self.value.numer

    def is_constant(self) -> bool:
        return self.numer.is_ground and self.denom.is_ground

    def is_polynomial(self) -> bool:
        return self.denom == 1

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = ScalarField.constant(self.chart, other)
        if not isinstance(other, ScalarField):
            return NotImplemented
        return self.chart == other.chart and self.value == other.value

    def __hash__(self) -> int:
        return hash((self.chart, self.value))

    # ---- arithmetic ----

    def _coerce(self, other) -> Optional[FracElement]:
        if isinstance(other, ScalarField):
            self.chart.require_same(other.chart)
            return other.value
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.chart.field.ground_new(to_qq(other))
        return None

    def __add__(self, other) -> "ScalarField":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return ScalarField(self.chart, self.value + rhs)

    __radd__ = __add__

    def __sub__(self, other) -> "ScalarField":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return ScalarField(self.chart, self.value - rhs)

    def __rsub__(self, other) -> "ScalarField":
        lhs = self._coerce(other)
        if lhs is None:
            return NotImplemented
        return ScalarField(self.chart, lhs - self.value)

    def __mul__(self, other) -> "ScalarField":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return ScalarField(self.chart, self.value * rhs)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ScalarField":
        divisor = self._coerce(other)
        if divisor is None:
            return NotImplemented
        if not divisor:
            raise ZeroFieldDivisionError("Division by an identically zero scalar field")
        return ScalarField(self.chart, self.value / divisor)

    def __rtruediv__(self, other) -> "ScalarField":
        lhs = self._coerce(other)
        if lhs is None:
            return NotImplemented
        if self.is_zero():
            raise ZeroFieldDivisionError("Division by an identically zero scalar field")
        return ScalarField(self.chart, lhs / self.value)

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.chart, -self.value)

    def __pow__(self, n: int) -> "ScalarField":
        if not isinstance(n, int):
            raise TypeError("Only integer powers of scalar fields are supported")
        if n < 0 and self.is_zero():
            raise ZeroFieldDivisionError("Negative power of an identically zero scalar field")
        return ScalarField(self.chart, self.value ** n)

    # ---- calculus ----

    def diff(self, i: int) -> "ScalarField":
        if not 0 <= i < self.chart.dim:
            raise DimensionMismatchError(f"Coordinate index {i} out of range for {self.chart}")
        return ScalarField(self.chart, self.value.diff(self.chart.field.gens[i]))

    def compose(self, components: Sequence["ScalarField"]) -> "ScalarField":
        """Substitute ``components`` (fields on another chart) for the coordinates."""
        if len(components) != self.chart.dim:
            raise DimensionMismatchError(
                f"Substitution needs {self.chart.dim} components, got {len(components)}"
            )
        source = components[0].chart
        values = [c.value for c in components]

        def substitute(poly) -> FracElement:
            total = source.field.zero
            for monom, coeff in poly.terms():
                term = source.field.ground_new(coeff)
                for v, e in zip(values, monom):
                    if e:
                        term = term * v ** e
                total = total + term
            return total

        denom = substitute(self.denom)
        if not denom:
            raise PoleError("Composition lands identically on a pole of the scalar field")
        return ScalarField(source, substitute(self.numer) / denom)

    # ---- evaluation ----

    def evaluate(self, point: Point) -> Number:
        self.chart.require_same(point.chart)
        if point.is_exact:
            values = [to_qq(v) for v in point.values]
            den = self.denom(*values)
            if not den:
                raise PoleError(f"Denominator vanishes at {point.to_json()}")
            return qq_to_fraction(self.numer(*values)) / qq_to_fraction(den)
        result = self.evaluate_array(point.as_array()[None, :])[0]
        return float(result)

    @cached_property
    def _numeric_terms(self):
        def compile_poly(poly):
            terms = poly.terms()
            exps = np.array([m for m, _ in terms], dtype=float).reshape(len(terms), self.chart.dim)
            coeffs = np.array([qq_to_float(c) for _, c in terms], dtype=float)
            return exps, coeffs

        return compile_poly(self.numer), compile_poly(self.denom)

    def evaluate_array(self, points: np.ndarray) -> np.ndarray:
        """Vectorised float evaluation at the rows of an (N, dim) array."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.chart.dim:
            raise DimensionMismatchError(
                f"Points have {points.shape[1]} columns, chart has dimension {self.chart.dim}"
            )
        (n_exp, n_coef), (d_exp, d_coef) = self._numeric_terms

        def run(exps, coeffs):
            if not len(coeffs):
                return np.zeros(points.shape[0])
            powers = np.prod(points[:, None, :] ** exps[None, :, :], axis=2)
            return powers @ coeffs

        den = run(d_exp, d_coef)
        if np.any(den == 0):
            bad = np.nonzero(den == 0)[0].tolist()
            raise PoleError(f"Denominator vanishes at sample rows {bad[:10]}")
        return run(n_exp, n_coef) / den

    # ---- text ----

    def to_text(self) -> str:
        return format_scalar(self)

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"ScalarField({self.to_text()!r} on {self.chart.coords})"


# ============ PRINTING ============

def _format_rational(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _format_monomial(monom: Iterable[int], coords: Sequence[str]) -> str:
    parts = []
    for name, e in zip(coords, monom):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def format_polynomial(poly, coords: Sequence[str]) -> str:
    terms = poly.terms()
    if not terms:
        return "0"
    out = ""
    for k, (monom, coeff) in enumerate(terms):
        c = qq_to_fraction(coeff)
        sign = "-" if c < 0 else "+"
        c = abs(c)
        mono = _format_monomial(monom, coords)
        if not mono:
            body = _format_rational(c)
        elif c == 1:
            body = mono
        else:
            body = f"{_format_rational(c)}*{mono}"
        if k == 0:
            out = f"-{body}" if sign == "-" else body
        else:
            out += f" {sign} {body}"
    return out


def _is_atom(poly) -> bool:
    """A single coordinate power or a positive integer: safe after '/' without parentheses."""
    terms = poly.terms()
    if len(terms) != 1:
        return False
    monom, coeff = terms[0]
    c = qq_to_fraction(coeff)
    if not any(monom):
        return c > 0 and c.denominator == 1
    return c == 1 and sum(1 for e in monom if e) == 1


def format_scalar(f: ScalarField) -> str:
    coords = f.chart.coords
    num = format_polynomial(f.numer, coords)
    if f.denom == 1:
        return num
    if len(f.numer.terms()) > 1:
        num = f"({num})"
    den = format_polynomial(f.denom, coords)
    if not _is_atom(f.denom):
        den = f"({den})"
    return f"{num}/{den}"
