"""Hypothesis strategies for exact objects on small charts."""
from itertools import combinations

from hypothesis import strategies as st

from app.models.graded import DifferentialForm, MultiVectorField, PolyMap
from app.models.scalar import Chart, Point, ScalarField

small_ints = st.integers(min_value=-3, max_value=3)


@st.composite
def polynomials(draw, chart: Chart, max_degree: int = 2, max_terms: int = 3) -> ScalarField:
    total = ScalarField.zero(chart)
    for _ in range(draw(st.integers(min_value=0, max_value=max_terms))):
        term = ScalarField.constant(chart, draw(small_ints))
        for i in range(chart.dim):
            power = draw(st.integers(min_value=0, max_value=max_degree))
            if power:
                term = term * ScalarField.coordinate(chart, i) ** power
        total = total + term
    return total


@st.composite
def graded(draw, cls, chart: Chart, degree: int, max_degree: int = 2):
    coeffs = {
        idx: draw(polynomials(chart, max_degree=max_degree, max_terms=2))
        for idx in combinations(range(chart.dim), degree)
    }
    return cls(chart, degree, coeffs)


def forms(chart: Chart, degree: int, max_degree: int = 2):
    return graded(DifferentialForm, chart, degree, max_degree)


def multivectors(chart: Chart, degree: int, max_degree: int = 2):
    return graded(MultiVectorField, chart, degree, max_degree)


def points(chart: Chart):
    return st.lists(small_ints, min_size=chart.dim, max_size=chart.dim).map(lambda v: Point(chart, tuple(v)))


CHARTS = {n: Chart(tuple(f"x{i}" for i in range(1, n + 1))) for n in range(2, 6)}


def charts(min_dim: int = 2, max_dim: int = 5):
    return st.sampled_from([CHARTS[n] for n in range(min_dim, max_dim + 1)])


@st.composite
def graded_tuples(draw, cls, count: int, min_dim: int = 3, max_dim: int = 5, max_grade: int = 3, max_degree: int = 1):
    """A chart together with ``count`` homogeneous objects of random grades on it."""
    chart = draw(charts(min_dim, max_dim))
    grades = [draw(st.integers(min_value=0, max_value=min(max_grade, chart.dim))) for _ in range(count)]
    return chart, [draw(graded(cls, chart, g, max_degree)) for g in grades]


def multivector_tuples(count: int, **kwargs):
    return graded_tuples(MultiVectorField, count, **kwargs)


def form_tuples(count: int, **kwargs):
    return graded_tuples(DifferentialForm, count, **kwargs)


@st.composite
def polymaps(draw, source: Chart, target: Chart, max_degree: int = 1):
    return PolyMap(source, target, [draw(polynomials(source, max_degree=max_degree, max_terms=2)) for _ in range(target.dim)])


@st.composite
def rational_functions(draw, chart: Chart, max_degree: int = 1) -> ScalarField:
    """Quotients with a denominator of the form 1 + p^2, never identically zero."""
    numerator = draw(polynomials(chart, max_degree=max_degree))
    return numerator / (1 + draw(polynomials(chart, max_degree=max_degree, max_terms=2)) ** 2)
