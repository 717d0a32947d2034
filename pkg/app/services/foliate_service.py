"""
Foliated calculus on product charts and pointwise transversality checks.

Leaves are the level sets of the transverse coordinates; d_F differentiates
along leaf coordinates only, so restriction intertwines d and d_F.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, GeometryError, ParityError, PoleError, SingularSystemError
from app.core.linalg import (
    nullspace_numeric,
    nullspace_rational,
    pfaffian,
    rank_numeric,
    rank_rational,
    solve_exact,
)
from app.models.foliation import ContactFoliationReport, FoliatedClassification, FoliatedForm, ProductChart
from app.models.graded import DifferentialForm, Index, PolyMap
from app.models.models import FoliatedKind
from app.models.scalar import Chart, Number, Point, ScalarField
from app.models.structures import ContactData
from app.services.geomstruct_service import sample_report, two_form_matrix

logger = logging.getLogger(__name__)


# ============ FOLIATED FORMS ============

def leaf_restrict(product: ProductChart, omega: DifferentialForm) -> FoliatedForm:
    """Drop every term containing a transverse differential."""
    product.chart.require_same(omega.chart)
    if omega.degree > product.leaf_dim:
        return FoliatedForm.zero(product, product.leaf_dim)
    kept = {idx: c for idx, c in omega.terms() if product.is_leaf_index(idx)}
    return FoliatedForm.from_coeffs(product, omega.degree, kept)


def d_F(omega: FoliatedForm) -> FoliatedForm:
    product = omega.product
    if omega.degree >= product.leaf_dim:
        return FoliatedForm.zero(product, product.leaf_dim)
    gens = product.chart.field.gens
    raw: Dict[Index, object] = {}
    for idx, c in omega.terms():
        for k in product.leaf_indices:
            if k in idx:
                continue
            dc = c.value.diff(gens[k])
            if not dc:
                continue
            before = sum(1 for i in idx if i < k)
            new_idx = tuple(sorted(idx + (k,)))
            term = -dc if before % 2 else dc
            raw[new_idx] = raw[new_idx] + term if new_idx in raw else term
    return FoliatedForm(product, DifferentialForm._from_raw(product.chart, omega.degree + 1, raw))


def _leaf_top(form: FoliatedForm) -> ScalarField:
    return form.coefficient(*form.product.leaf_indices)


def _power(form: FoliatedForm, k: int) -> FoliatedForm:
    result = FoliatedForm(form.product, DifferentialForm.scalar(ScalarField.one(form.chart)))
    for _ in range(k):
        result = result.wedge(form)
    return result


# ============ CLASSIFICATION ============

def foliated_classify(
    product: ProductChart,
    alpha: Optional[FoliatedForm] = None,
    omega: Optional[FoliatedForm] = None,
    samples: Sequence[Point] = (),
) -> FoliatedClassification:
    """Classify foliated data with exact top powers in leaf directions plus samples.

    A 1-form (with an optional 2-form) is tested for a foliated contact form,
    falling back to an almost contact pair; a lone 2-form is tested for a
    foliated symplectic or foliated lcs form.
    """
    if alpha is None and omega is None:
        raise GeometryError("foliated_classify needs a foliated 1-form or 2-form")
    leaf_dim = product.leaf_dim
    if alpha is not None:
        if alpha.degree != 1:
            raise DimensionMismatchError(f"Expected a foliated 1-form, got degree {alpha.degree}")
        if leaf_dim % 2 == 0:
            raise ParityError(f"Contact structures need odd leaf dimension, leaves have dimension {leaf_dim}")
        k = (leaf_dim - 1) // 2
        report = sample_report(_leaf_top(alpha.wedge(_power(d_F(alpha), k))), samples)
        if report.ok:
            return FoliatedClassification(FoliatedKind.FOLIATED_CONTACT, report)
        if omega is not None:
            almost = sample_report(_leaf_top(alpha.wedge(_power(omega, k))), samples)
            if almost.ok:
                return FoliatedClassification(FoliatedKind.ALMOST_CONTACT, almost)
        return FoliatedClassification(FoliatedKind.NONE, report)

    if omega.degree != 2:
        raise DimensionMismatchError(f"Expected a foliated 2-form, got degree {omega.degree}")
    if leaf_dim % 2:
        raise ParityError(f"Symplectic structures need even leaf dimension, leaves have dimension {leaf_dim}")
    report = sample_report(_leaf_top(_power(omega, leaf_dim // 2)), samples)
    if not report.ok:
        return FoliatedClassification(FoliatedKind.NONE, report)
    d_omega = d_F(omega)
    if d_omega.is_zero():
        return FoliatedClassification(FoliatedKind.FOLIATED_SYMPLECTIC, report)
    theta = _foliated_lee_form(omega, d_omega)
    if theta is None or not d_F(theta).is_zero():
        return FoliatedClassification(FoliatedKind.NONE, report, theta)
    return FoliatedClassification(FoliatedKind.FOLIATED_LCS, report, theta)


def _foliated_lee_form(omega: FoliatedForm, d_omega: FoliatedForm) -> Optional[FoliatedForm]:
    product = omega.product
    chart = product.chart
    leaves = product.leaf_indices
    products = [FoliatedForm.from_coeffs(product, 1, {(k,): ScalarField.one(chart)}).wedge(omega) for k in leaves]
    rows, rhs = [], []
    for idx in combinations(leaves, 3):
        rows.append([p.coefficient(*idx) for p in products])
        rhs.append([-d_omega.coefficient(*idx)])
    try:
        solution = solve_exact(rows, rhs, chart, what="foliated Lee form system")
    except SingularSystemError as exc:
        logger.info(f"no foliated Lee form: {exc.detail}")
        return None
    return FoliatedForm.from_coeffs(product, 1, {(k,): s[0] for k, s in zip(leaves, solution)})


# ============ TRANSVERSALITY ============

def formal_solution_check(C: ContactData, L: Sequence[Sequence[Number]], point: Point) -> bool:
    """True iff L is onto and d alpha is nondegenerate on ker L ∩ ker alpha at ``point``.

    The intersection must have dimension dim M - 2q - 1. Exact when the point
    and L are rational, numeric with RANK_TOL otherwise.
    """
    m = C.chart.dim
    rows = [list(r) for r in L]
    codim = len(rows)
    if any(len(r) != m for r in rows):
        raise DimensionMismatchError(f"Linear map rows must have {m} entries")
    if codim % 2 or codim >= m:
        raise DimensionMismatchError(f"Target dimension {codim} must be even and below {m}")
    try:
        a = [c.evaluate(point) for c in C.alpha.components()]
        W = [[c.evaluate(point) for c in row] for row in two_form_matrix(C.d_alpha)]
    except PoleError:
        logger.warning(f"Contact data has a pole at {point.to_json()}")
        return False
    target = m - codim - 1
    exact = point.is_exact and all(isinstance(v, (int, Fraction)) for r in rows for v in r)

    if exact:
        if rank_rational(rows) < codim:
            return False
        kernel = nullspace_rational(rows + [a], m)
        if len(kernel) != target:
            return False
        pairing = [[sum(u[i] * W[i][j] * v[j] for i in range(m) for j in range(m)) for v in kernel] for u in kernel]
        return target == 0 or pfaffian(pairing) != 0

    tol = settings.RANK_TOL
    L_arr = np.array(rows, dtype=float).reshape(codim, m)
    if rank_numeric(L_arr, tol) < codim:
        return False
    kernel = nullspace_numeric(np.vstack([L_arr, np.array(a, dtype=float)]), m, tol)
    if kernel.shape[0] != target:
        return False
    if target == 0:
        return True
    pairing = kernel @ np.array(W, dtype=float) @ kernel.T
    return abs(pfaffian(pairing.tolist())) > tol


def map_transversality_report(C: ContactData, f: PolyMap, samples: Sequence[Point]) -> List[bool]:
    """formal_solution_check applied to df at each sample, in sample order."""
    C.chart.require_same(f.source)
    jacobian = f.jacobian()

    def check(p: Point) -> bool:
        try:
            L = [[c.evaluate(p) for c in row] for row in jacobian]
        except PoleError:
            logger.warning(f"Map has a pole at {p.to_json()}")
            return False
        return formal_solution_check(C, L, p)

    with ThreadPoolExecutor(max_workers=settings.THREADS) as executor:
        results = list(executor.map(check, samples))
    logger.debug(f"transversality: {sum(results)} of {len(results)} samples pass")
    return results


def transverse_projection(product: ProductChart) -> PolyMap:
    if not product.transverse:
        raise DimensionMismatchError("Product chart has no transverse coordinates")
    chart = product.chart
    return PolyMap(chart, Chart(product.transverse), [ScalarField.coordinate(chart, i) for i in range(product.q)])


def contact_foliation_report(
    C: ContactData, product: ProductChart, samples: Sequence[Point] = ()
) -> ContactFoliationReport:
    """(a) is the leaf restriction of alpha a foliated contact form, (b) are the leaves contact submanifolds."""
    product.chart.require_same(C.chart)
    if product.q % 2:
        raise ParityError(f"Leaves of odd codimension {product.q} in odd dimension cannot be contact")
    classification = foliated_classify(product, alpha=leaf_restrict(product, C.alpha), samples=samples)
    if product.q == 0:
        leaves = [classification.report.ok for _ in samples]
    else:
        leaves = map_transversality_report(C, transverse_projection(product), samples)
    return ContactFoliationReport(classification, leaves)
