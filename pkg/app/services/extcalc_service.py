"""
Graded calculus on a chart.

Forms and multivectors are exterior algebras over the chart's rational
function field. Multivectors use the anticommuting symbols zeta_i for the
coordinate vector fields. The Schouten bracket takes odd derivatives from
the right (zeta_i is moved to the last slot before it is removed), which is
the convention under which the graded Leibniz rules and [X, Y] = L_X Y hold
for every degree.
"""
import logging
from typing import Dict, List, Optional, Sequence, Union

from app.core.exceptions import DimensionMismatchError
from app.models.graded import DifferentialForm, GradedField, Index, MultiVectorField, PolyMap, merge_sign
from app.models.scalar import ScalarField

logger = logging.getLogger(__name__)


def _accumulate(raw: Dict[Index, object], idx: Index, term) -> None:
    if idx in raw:
        raw[idx] = raw[idx] + term
    else:
        raw[idx] = term


def _require_vector(X: MultiVectorField) -> None:
    if not isinstance(X, MultiVectorField) or X.degree != 1:
        raise DimensionMismatchError("Expected a vector field (multivector of degree 1)")


# ============ ALGEBRA ============

def wedge(a: GradedField, b: GradedField) -> GradedField:
    return a.wedge(b)


def wedge_power(a: GradedField, k: int) -> GradedField:
    result = type(a).scalar(ScalarField.one(a.chart))
    for _ in range(k):
        result = result.wedge(a)
    return result


# ============ FORMS ============

def exterior_d(omega: DifferentialForm) -> DifferentialForm:
    chart = omega.chart
    if omega.degree >= chart.dim:
        return DifferentialForm.zero(chart, chart.dim)
    gens = chart.field.gens
    raw: Dict[Index, object] = {}
    for idx, c in omega.terms():
        for k in range(chart.dim):
            if k in idx:
                continue
            dc = c.value.diff(gens[k])
            if not dc:
                continue
            before = sum(1 for i in idx if i < k)
            new_idx = tuple(sorted(idx + (k,)))
            _accumulate(raw, new_idx, -dc if before % 2 else dc)
    return DifferentialForm._from_raw(chart, omega.degree + 1, raw)


def differential(f: ScalarField) -> DifferentialForm:
    return exterior_d(DifferentialForm.scalar(f))


def interior_product(X: MultiVectorField, omega: DifferentialForm) -> DifferentialForm:
    _require_vector(X)
    X.chart.require_same(omega.chart)
    if omega.degree == 0:
        raise DimensionMismatchError("Interior product of a 0-form is undefined")
    raw: Dict[Index, object] = {}
    for idx, c in omega.terms():
        for pos, i in enumerate(idx):
            xi = X.coeffs.get((i,))
            if xi is None:
                continue
            term = xi.value * c.value
            _accumulate(raw, idx[:pos] + idx[pos + 1:], -term if pos % 2 else term)
    return DifferentialForm._from_raw(omega.chart, omega.degree - 1, raw)


def apply_vector(X: MultiVectorField, f: ScalarField) -> ScalarField:
    """Directional derivative X(f)."""
    _require_vector(X)
    total = ScalarField.zero(f.chart)
    for (i,), xi in X.terms():
        total = total + xi * f.diff(i)
    return total


def form_on_vectors(omega: DifferentialForm, vectors: Sequence[MultiVectorField]) -> ScalarField:
    """omega(v_1, ..., v_k), normalised so that (dx ^ dy)(@x, @y) = 1."""
    if len(vectors) != omega.degree:
        raise DimensionMismatchError(f"A {omega.degree}-form needs {omega.degree} vectors")
    current = omega
    for v in vectors:
        current = interior_product(v, current)
    return current.scalar_part()


def lie_derivative(X: MultiVectorField, omega: DifferentialForm) -> DifferentialForm:
    _require_vector(X)
    if omega.degree == 0:
        return DifferentialForm.scalar(apply_vector(X, omega.scalar_part()))
    result = exterior_d(interior_product(X, omega))
    if omega.degree < omega.chart.dim:
        result = result + interior_product(X, exterior_d(omega))
    return result


def pullback(phi: PolyMap, omega: DifferentialForm) -> DifferentialForm:
    phi.target.require_same(omega.chart)
    source = phi.source
    if omega.degree > source.dim:
        raise DimensionMismatchError(f"Cannot pull a {omega.degree}-form back to {source}")
    differentials = [differential(c) for c in phi.components]
    result = DifferentialForm.zero(source, omega.degree)
    for idx, c in omega.terms():
        term = DifferentialForm.scalar(c.compose(phi.components))
        for i in idx:
            term = term.wedge(differentials[i])
            if term.is_zero():
                break
        if not term.is_zero():
            result = result + term
    return result


def lichnerowicz_d(theta: DifferentialForm, omega: DifferentialForm) -> DifferentialForm:
    """d_theta = d + theta ^ ."""
    if theta.degree != 1:
        raise DimensionMismatchError("The Lichnerowicz differential needs a 1-form theta")
    if omega.degree >= omega.chart.dim:
        return DifferentialForm.zero(omega.chart, omega.chart.dim)
    return exterior_d(omega) + theta.wedge(omega)


# ============ MULTIVECTORS ============

def _odd_derivative(A: MultiVectorField, i: int) -> Dict[Index, object]:
    """Right derivative d/dzeta_i: move zeta_i to the end, then drop it."""
    raw: Dict[Index, object] = {}
    for idx, c in A.terms():
        if i not in idx:
            continue
        pos = idx.index(i)
        moves = len(idx) - 1 - pos
        rest = idx[:pos] + idx[pos + 1:]
        _accumulate(raw, rest, -c.value if moves % 2 else c.value)
    return raw


def _even_derivative(A: MultiVectorField, i: int) -> Dict[Index, object]:
    gen = A.chart.field.gens[i]
    raw: Dict[Index, object] = {}
    for idx, c in A.terms():
        dc = c.value.diff(gen)
        if dc:
            raw[idx] = dc
    return raw


def _wedge_raw(left: Dict[Index, object], right: Dict[Index, object], raw: Dict[Index, object], negate: bool) -> None:
    for i, a in left.items():
        for j, b in right.items():
            sign, k = merge_sign(i, j)
            if not sign:
                continue
            term = a * b
            if (sign < 0) != negate:
                term = -term
            _accumulate(raw, k, term)


def schouten_bracket(A: MultiVectorField, B: MultiVectorField) -> MultiVectorField:
    """[A, B] = sum_i (A d/dzeta_i) ^ d_i B - (-1)^((p-1)(q-1)) sum_i (B d/dzeta_i) ^ d_i A."""
    A.chart.require_same(B.chart)
    chart = A.chart
    p, q = A.degree, B.degree
    degree = p + q - 1
    if degree < 0:
        return MultiVectorField.zero(chart, 0)
    if degree > chart.dim:
        return MultiVectorField.zero(chart, chart.dim)
    flip = ((p - 1) * (q - 1)) % 2 == 0
    raw: Dict[Index, object] = {}
    for i in range(chart.dim):
        if p > 0:
            _wedge_raw(_odd_derivative(A, i), _even_derivative(B, i), raw, negate=False)
        if q > 0:
            _wedge_raw(_odd_derivative(B, i), _even_derivative(A, i), raw, negate=flip)
    return MultiVectorField._from_raw(chart, degree, raw)


def lie_bracket(X: MultiVectorField, Y: MultiVectorField) -> MultiVectorField:
    _require_vector(X)
    _require_vector(Y)
    return schouten_bracket(X, Y)


def mv_pairing(
    Lam: MultiVectorField,
    beta: DifferentialForm,
    gamma: Optional[DifferentialForm] = None,
) -> Union[MultiVectorField, ScalarField]:
    """Lambda^#(beta) with one covector, Lambda(beta, gamma) with two."""
    if Lam.degree != 2 or beta.degree != 1:
        raise DimensionMismatchError("mv_pairing needs a bivector and 1-forms")
    Lam.chart.require_same(beta.chart)
    chart = Lam.chart
    b = beta.components()
    sharp: List[ScalarField] = [ScalarField.zero(chart) for _ in range(chart.dim)]
    for (i, j), c in Lam.terms():
        # Lambda(beta, dx_j) picks c * b_i; Lambda(beta, dx_i) picks -c * b_j
        sharp[j] = sharp[j] + c * b[i]
        sharp[i] = sharp[i] - c * b[j]
    if gamma is None:
        return MultiVectorField.from_components(sharp)
    if gamma.degree != 1:
        raise DimensionMismatchError("mv_pairing needs 1-forms")
    g = gamma.components()
    total = ScalarField.zero(chart)
    for k in range(chart.dim):
        total = total + sharp[k] * g[k]
    return total


def pushforward(phi: PolyMap, phi_inverse: PolyMap, A: MultiVectorField) -> MultiVectorField:
    """phi_* A for an invertible map with rational inverse."""
    phi.source.require_same(A.chart)
    phi_inverse.source.require_same(phi.target)
    source, target = phi.source, phi.target
    if source.dim != target.dim:
        raise DimensionMismatchError("Pushforward needs an invertible map between equal dimensions")
    jac = phi.jacobian()
    # image of @x_i, written in target indices with source coefficients
    images = [
        MultiVectorField(source, 1, {(j,): jac[j][i] for j in range(target.dim)})
        for i in range(source.dim)
    ]
    moved = MultiVectorField.zero(source, A.degree)
    for idx, c in A.terms():
        term = MultiVectorField.scalar(c)
        for i in idx:
            term = term.wedge(images[i])
        moved = moved + term
    return MultiVectorField(
        target,
        A.degree,
        {idx: c.compose(phi_inverse.components) for idx, c in moved.terms()},
    )
