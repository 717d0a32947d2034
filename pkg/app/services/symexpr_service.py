"""Exact scalar-field operations on a named chart."""
import logging
from enum import Enum
from typing import Sequence, Union

from app.core.exceptions import DimensionMismatchError, ExpressionSyntaxError
from app.models.graded import GradedField
from app.models.scalar import Chart, Number, Point, ScalarField
from app.services.grammar_service import parse_expression

logger = logging.getLogger(__name__)


class ScalarOp(str, Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"


def parse_scalar(text: str, chart: Chart) -> ScalarField:
    value = parse_expression(text, chart)
    if isinstance(value, GradedField):
        if value.degree != 0:
            raise ExpressionSyntaxError(f"Expected a scalar but {text!r} has degree {value.degree}", 0)
        value = value.scalar_part()
    return value


def scalar_arith(op: Union[ScalarOp, str], a: ScalarField, b: ScalarField) -> ScalarField:
    op = ScalarOp(op)
    a.chart.require_same(b.chart)
    if op is ScalarOp.ADD:
        return a + b
    if op is ScalarOp.SUB:
        return a - b
    if op is ScalarOp.MUL:
        return a * b
    return a / b


def partial_derivative(f: ScalarField, i: int) -> ScalarField:
    return f.diff(i)


def gradient(f: ScalarField) -> list[ScalarField]:
    return [f.diff(i) for i in range(f.chart.dim)]


def evaluate(f: ScalarField, p: Point) -> Number:
    return f.evaluate(p)


def make_point(chart: Chart, values: Sequence) -> Point:
    if len(values) != chart.dim:
        raise DimensionMismatchError(f"Point needs {chart.dim} values, got {len(values)}")
    return Point(chart, tuple(values))
