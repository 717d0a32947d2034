"""
Structure predicates and constructive conversions.

Coefficient matrices: for a 2-form W_ij = omega(@x_i, @x_j), for a bivector
P_ij = Lambda(d x_i, d x_j). With Lambda^#(beta) = Lambda(beta, .) the
musical map of a bivector is beta -> P^T beta.
"""
import logging
from itertools import combinations
from math import factorial
from typing import List, Optional, Sequence, Union

import numpy as np

from app.core.config import settings
from app.core.exceptions import (
    DegenerateStructureError,
    DimensionMismatchError,
    GeometryError,
    ParityError,
    PoleError,
    SingularSystemError,
)
from app.core.linalg import inverse_exact, pfaffian, rank_exact, rank_numeric, rank_rational, solve_exact
from app.models.graded import DifferentialForm, MultiVectorField
from app.models.models import StructureKind
from app.models.scalar import Chart, Point, ScalarField
from app.models.structures import (
    ContactData,
    ContactReport,
    GradientFrame,
    HamiltonianResiduals,
    JacobiCheck,
    JacobiPair,
    LCSPair,
    NondegReport,
    TwoFormClassification,
)
from app.services.extcalc_service import (
    apply_vector,
    differential,
    exterior_d,
    form_on_vectors,
    interior_product,
    lichnerowicz_d,
    lie_bracket,
    lie_derivative,
    mv_pairing,
    schouten_bracket,
    wedge_power,
)

logger = logging.getLogger(__name__)


# ============ MATRIX HELPERS ============

def two_form_matrix(omega) -> List[List[ScalarField]]:
    """Full antisymmetric coefficient matrix of a 2-form or bivector."""
    chart = omega.chart
    m = chart.dim
    rows = [[ScalarField.zero(chart) for _ in range(m)] for _ in range(m)]
    for (i, j), c in omega.terms():
        rows[i][j] = c
        rows[j][i] = -c
    return rows


def _from_matrix(cls, rows: Sequence[Sequence[ScalarField]], chart: Chart):
    m = chart.dim
    return cls(chart, 2, {(i, j): rows[i][j] for i in range(m) for j in range(i + 1, m)})


def _vector(chart: Chart, components: Sequence[ScalarField]) -> MultiVectorField:
    return MultiVectorField(chart, 1, {(i,): c for i, c in enumerate(components)})


def _covector(chart: Chart, components: Sequence[ScalarField]) -> DifferentialForm:
    return DifferentialForm(chart, 1, {(i,): c for i, c in enumerate(components)})


def _vanishes(f: ScalarField, p: Point) -> bool:
    try:
        value = f.evaluate(p)
    except PoleError:
        logger.warning(f"Sample {p.to_json()} is a pole of {f.to_text()}")
        return True
    if isinstance(value, float):
        return abs(value) < settings.CONTACT_TOL
    return value == 0


def sample_report(top: ScalarField, samples: Sequence[Point]) -> NondegReport:
    samples = list(samples)
    if top.is_zero():
        return NondegReport(top, True, samples, len(samples))
    failures = [p for p in samples if _vanishes(top, p)]
    if failures:
        logger.warning(f"Top coefficient {top.to_text()} vanishes at {len(failures)} of {len(samples)} samples")
    return NondegReport(top, False, failures, len(samples))


# ============ NONDEGENERACY ============

def nondegeneracy_report(
    omega: DifferentialForm,
    samples: Sequence[Point] = (),
    directions: Optional[Sequence[MultiVectorField]] = None,
) -> NondegReport:
    """Exact top coefficient of omega^m plus a sample check.

    On an odd-dimensional chart pass ``directions``: an even number 2k of
    vector fields; the report is then about omega restricted to their span,
    with top coefficient omega^k(v_1, ..., v_2k) = k! Pf(omega(v_i, v_j)).
    """
    if omega.degree != 2:
        raise DimensionMismatchError(f"Expected a 2-form, got degree {omega.degree}")
    chart = omega.chart
    if directions is not None:
        if len(directions) % 2:
            raise ParityError(f"Restriction needs an even number of directions, got {len(directions)}")
        pairing = [[form_on_vectors(omega, [u, v]) for v in directions] for u in directions]
        k = len(directions) // 2
        top = pfaffian(pairing) * factorial(k)
        if not isinstance(top, ScalarField):
            top = ScalarField.constant(chart, top)
        return sample_report(top, samples)
    if chart.dim % 2:
        raise ParityError(f"Odd dimension {chart.dim}: pass restriction directions")
    top_form = wedge_power(omega, chart.dim // 2)
    return sample_report(top_form.coefficient(*range(chart.dim)), samples)


def is_contact(alpha: DifferentialForm, samples: Sequence[Point] = ()) -> ContactReport:
    chart = alpha.chart
    if alpha.degree != 1:
        raise DimensionMismatchError(f"Expected a 1-form, got degree {alpha.degree}")
    if chart.dim % 2 == 0:
        raise ParityError(f"Contact forms live in odd dimension, chart has {chart.dim}")
    n = (chart.dim - 1) // 2
    top_form = alpha.wedge(wedge_power(exterior_d(alpha), n))
    base = sample_report(top_form.coefficient(*range(chart.dim)), samples)
    return ContactReport(
        base.top_power, base.identically_zero, base.sample_failures, base.samples_checked, top_form
    )


# ============ CONTACT ============

def reeb_field(alpha: DifferentialForm) -> MultiVectorField:
    """Unique R with alpha(R) = 1 and i_R d alpha = 0."""
    chart = alpha.chart
    W = two_form_matrix(exterior_d(alpha))
    a = alpha.components()
    zero, one = ScalarField.zero(chart), ScalarField.one(chart)
    rows = [a] + [[W[i][j] for i in range(chart.dim)] for j in range(chart.dim)]
    rhs = [[one]] + [[zero] for _ in range(chart.dim)]
    solution = solve_exact(rows, rhs, chart, what="Reeb system")
    return _vector(chart, [s[0] for s in solution])


def _phi_matrix(alpha: DifferentialForm, d_alpha: DifferentialForm) -> List[List[ScalarField]]:
    W = two_form_matrix(d_alpha)
    a = alpha.components()
    m = alpha.chart.dim
    return [[W[j][k] + a[k] * a[j] for j in range(m)] for k in range(m)]


def certify_contact(alpha: DifferentialForm, samples: Sequence[Point] = ()) -> ContactData:
    report = is_contact(alpha, samples)
    if report.identically_zero:
        raise DegenerateStructureError(f"{alpha.to_text()} is not a contact form: alpha ^ (d alpha)^n = 0")
    if report.sample_failures:
        raise DegenerateStructureError(
            f"{alpha.to_text()} degenerates at sample points", report.sample_failures
        )
    chart = alpha.chart
    d_alpha = exterior_d(alpha)
    reeb = reeb_field(alpha)
    phi_inv = inverse_exact(_phi_matrix(alpha, d_alpha), chart, what="phi")
    logger.debug(f"certified contact form {alpha.to_text()} with Reeb field {reeb.to_text()}")
    return ContactData(
        chart=chart,
        alpha=alpha,
        d_alpha=d_alpha,
        reeb=reeb,
        n=(chart.dim - 1) // 2,
        phi_inverse_matrix=tuple(tuple(r) for r in phi_inv),
    )


def musical_phi(C: ContactData, X: MultiVectorField) -> DifferentialForm:
    """phi(X) = i_X d alpha + alpha(X) alpha."""
    return interior_product(X, C.d_alpha) + C.alpha.scale(form_on_vectors(C.alpha, [X]))


def phi_inverse(C: ContactData, beta: DifferentialForm) -> MultiVectorField:
    if beta.degree != 1:
        raise DimensionMismatchError("phi_inverse needs a 1-form")
    C.chart.require_same(beta.chart)
    b = beta.components()
    m = C.chart.dim
    inv = C.phi_inverse_matrix
    comps = []
    for j in range(m):
        total = ScalarField.zero(C.chart)
        for k in range(m):
            total = total + inv[j][k] * b[k]
        comps.append(total)
    return _vector(C.chart, comps)


def contact_hamiltonian(C: ContactData, H: ScalarField) -> MultiVectorField:
    """X_H with alpha(X_H) = H and i_{X_H} d alpha = -dH + dH(R) alpha."""
    dH = differential(H)
    rhs = -dH + C.alpha.scale(apply_vector(C.reeb, H) + H)
    return phi_inverse(C, rhs)


def split_vector(C: ContactData, X: MultiVectorField):
    """(X_bar, alpha(X)) with X = X_bar + alpha(X) R and alpha(X_bar) = 0."""
    a = form_on_vectors(C.alpha, [X])
    return X - C.reeb.scale(a), a


def contact_vector_factor(C: ContactData, X: MultiVectorField) -> ScalarField:
    """f with L_X alpha = f alpha; raises when X is not a contact vector field."""
    L = lie_derivative(X, C.alpha)
    f = form_on_vectors(L, [C.reeb])
    if not (L - C.alpha.scale(f)).is_zero():
        raise GeometryError(f"{X.to_text()} does not preserve the contact distribution")
    return f


def sigma_map(C: ContactData, G: DifferentialForm) -> MultiVectorField:
    """sigma(G) = -phi^-1(G - G(R) alpha), a section of ker alpha."""
    G_xi = G - C.alpha.scale(form_on_vectors(G, [C.reeb]))
    return -phi_inverse(C, G_xi)


def tau_map(C: ContactData, X: MultiVectorField) -> DifferentialForm:
    """Inverse of sigma on ker alpha: tau(X) = -i_X d alpha."""
    if not form_on_vectors(C.alpha, [X]).is_zero():
        raise GeometryError(f"{X.to_text()} is not tangent to the contact distribution")
    return -interior_product(X, C.d_alpha)


# ============ TWO-FORMS ============

def classify_2form(omega: DifferentialForm, samples: Sequence[Point] = ()) -> TwoFormClassification:
    chart = omega.chart
    if chart.dim % 2:
        raise ParityError(f"classify_2form needs an even dimensional chart, got {chart.dim}")
    report = nondegeneracy_report(omega, samples)
    if not report.ok:
        return TwoFormClassification(StructureKind.DEGENERATE, report)
    d_omega = exterior_d(omega)
    if d_omega.is_zero():
        return TwoFormClassification(StructureKind.SYMPLECTIC, report)
    # theta ^ omega = -d omega, one equation per 3-index
    products = [DifferentialForm.basis(chart, k).wedge(omega) for k in range(chart.dim)]
    rows, rhs = [], []
    for idx in combinations(range(chart.dim), 3):
        rows.append([p.coefficient(*idx) for p in products])
        rhs.append([-d_omega.coefficient(*idx)])
    try:
        solution = solve_exact(rows, rhs, chart, what="Lee form system")
    except SingularSystemError as exc:
        logger.info(f"no Lee form for {omega.to_text()}: {exc.detail}")
        return TwoFormClassification(StructureKind.NOT_CONFORMALLY_CLOSED, report)
    theta = _covector(chart, [s[0] for s in solution])
    if not exterior_d(theta).is_zero():
        return TwoFormClassification(StructureKind.NOT_CONFORMALLY_CLOSED, report, theta)
    return TwoFormClassification(StructureKind.LCS, report, theta)


def _inverse_bivector(omega: DifferentialForm) -> MultiVectorField:
    chart = omega.chart
    if chart.dim % 2:
        raise ParityError(f"A nondegenerate 2-form needs even dimension, chart has {chart.dim}")
    try:
        inv = inverse_exact(two_form_matrix(omega), chart, what="2-form")
    except SingularSystemError as exc:
        raise DegenerateStructureError(f"{omega.to_text()} is degenerate: {exc.detail}")
    return _from_matrix(MultiVectorField, [[-c for c in row] for row in inv], chart)


def poisson_from_symplectic(omega: DifferentialForm) -> MultiVectorField:
    if not exterior_d(omega).is_zero():
        raise GeometryError(f"{omega.to_text()} is not closed")
    return _inverse_bivector(omega)


def jacobi_from_lcs(pair: LCSPair) -> JacobiPair:
    """Lambda = -(omega matrix)^-1, E = Lambda^#(theta)."""
    Lam = _inverse_bivector(pair.omega)
    return JacobiPair(Lam, mv_pairing(Lam, pair.theta))


# ============ JACOBI ============

def jacobi_from_contact(C: ContactData) -> JacobiPair:
    """Lambda(beta, beta') = d alpha(phi^-1 beta, phi^-1 beta'), E = R."""
    m = C.chart.dim
    W = two_form_matrix(C.d_alpha)
    inv = C.phi_inverse_matrix
    rows = [[ScalarField.zero(C.chart) for _ in range(m)] for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            total = ScalarField.zero(C.chart)
            for k in range(m):
                if inv[k][i].is_zero():
                    continue
                for l in range(m):
                    total = total + inv[k][i] * W[k][l] * inv[l][j]
            rows[i][j] = total
    return JacobiPair(_from_matrix(MultiVectorField, rows, C.chart), C.reeb)


def jacobi_check(P: JacobiPair) -> JacobiCheck:
    """Decides [Lambda, Lambda] + 2 E ^ Lambda = 0 and [Lambda, E] = 0 exactly.

    With odd derivatives taken from the right the Jacobi condition carries
    this sign; the Poisson case E = 0 is unaffected.
    """
    Lam, E = P.Lambda, P.E
    bracket = schouten_bracket(Lam, Lam) + E.wedge(Lam).scale(2)
    invariance = schouten_bracket(Lam, E)
    return JacobiCheck(bracket.is_zero(), invariance.is_zero(), bracket, invariance)


def jacobi_bracket(P: JacobiPair, f: ScalarField, g: ScalarField) -> ScalarField:
    """{f, g} = Lambda(df, dg) + f E(g) - g E(f)."""
    return mv_pairing(P.Lambda, differential(f), differential(g)) + f * apply_vector(P.E, g) - g * apply_vector(P.E, f)


def hamiltonian_field(P: JacobiPair, f: ScalarField) -> MultiVectorField:
    """X_f = Lambda^#(df), so that X_f(g) = Lambda(df, dg)."""
    return mv_pairing(P.Lambda, differential(f))


def hamiltonian_relations_check(P: JacobiPair, f: ScalarField, g: ScalarField) -> HamiltonianResiduals:
    """Residuals of [E, X_f] = X_{Ef} and
    [X_f, X_g] = X_{f,g} - f X_{Eg} + g X_{Ef} - Lambda(df, dg) E.
    """
    E = P.E
    Xf, Xg = hamiltonian_field(P, f), hamiltonian_field(P, g)
    Ef, Eg = apply_vector(E, f), apply_vector(E, g)
    invariance = lie_bracket(E, Xf) - hamiltonian_field(P, Ef)
    expected = (
        hamiltonian_field(P, jacobi_bracket(P, f, g))
        - hamiltonian_field(P, Eg).scale(f)
        + hamiltonian_field(P, Ef).scale(g)
        - E.scale(mv_pairing(P.Lambda, differential(f), differential(g)))
    )
    return HamiltonianResiduals(invariance, lie_bracket(Xf, Xg) - expected)


def _rank_at(rows: Sequence[Sequence[ScalarField]], p: Point) -> int:
    try:
        values = [[c.evaluate(p) for c in row] for row in rows]
    except PoleError:
        return -1
    if p.is_exact:
        return rank_rational(values)
    return rank_numeric(np.array(values, dtype=float), settings.RANK_TOL)


def structure_from_nondeg_jacobi(
    P: JacobiPair, samples: Sequence[Point] = ()
) -> Union[LCSPair, ContactData]:
    """LCS pair (even dimension) or contact data (odd dimension) of a nondegenerate Jacobi pair."""
    chart = P.chart
    m = chart.dim
    Pm = two_form_matrix(P.Lambda)
    e = P.E.components()
    spanning = [list(row) for row in Pm] + [e]
    if rank_exact(spanning, chart) < m:
        raise DegenerateStructureError(
            f"Characteristic distribution of ({P.Lambda.to_text()}, {P.E.to_text()}) is not the tangent space"
        )
    bad = [p for p in samples if _rank_at(spanning, p) < m]
    if bad:
        raise DegenerateStructureError("Characteristic distribution degenerates at samples", bad)

    if m % 2 == 0:
        try:
            inv = inverse_exact(Pm, chart, what="Lambda^#")
        except SingularSystemError as exc:
            raise ParityError(f"Lambda^# is not invertible in even dimension: {exc.detail}")
        W = [[-c for c in row] for row in inv]
        omega = _from_matrix(DifferentialForm, W, chart)
        theta = _covector(chart, [sum((W[i][k] * e[k] for k in range(m)), ScalarField.zero(chart)) for i in range(m)])
        if not exterior_d(theta).is_zero() or not lichnerowicz_d(theta, omega).is_zero():
            raise DegenerateStructureError("Recovered pair is not locally conformal symplectic; check the Jacobi identity")
        return LCSPair(omega, theta)

    zero, one = ScalarField.zero(chart), ScalarField.one(chart)
    rows = [e] + [list(row) for row in Pm]
    rhs = [[one]] + [[zero] for _ in range(m)]
    try:
        solution = solve_exact(rows, rhs, chart, what="contact form system")
    except SingularSystemError as exc:
        raise ParityError(f"E lies in the image of Lambda^# in odd dimension: {exc.detail}")
    alpha = _covector(chart, [s[0] for s in solution])
    C = certify_contact(alpha, samples)
    if C.reeb != P.E:
        raise DegenerateStructureError(f"Recovered form {alpha.to_text()} has Reeb field {C.reeb.to_text()}, not E")
    return C


# ============ CONTACT GRADIENT ============

def contact_gradient_frame(
    C: ContactData, functions: Sequence[ScalarField], samples: Sequence[Point] = ()
) -> GradientFrame:
    """Horizontal gradients sigma(d f_i) and their d alpha pairing matrix."""
    count = len(functions)
    if count % 2 or count == 0:
        raise ParityError(f"Contact gradient needs an even number of functions, got {count}")
    if count >= C.chart.dim:
        raise DimensionMismatchError(f"{count} functions on a {C.chart.dim}-dimensional chart")
    frame = [sigma_map(C, differential(f)) for f in functions]
    pairing = [[form_on_vectors(C.d_alpha, [u, v]) for v in frame] for u in frame]
    top = pfaffian(pairing) * factorial(count // 2)
    return GradientFrame(frame, pairing, top, sample_report(top, samples))
