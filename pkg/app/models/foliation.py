"""
Product model charts R^q x R^(n-q) and foliated (tangential) forms.

Transverse coordinates come first; the leaves are the level sets of the
transverse coordinates. A foliated form only carries leaf differentials,
its coefficients may depend on every coordinate.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import List, Mapping, Optional, Tuple

from app.core.exceptions import GeometryError
from app.models.graded import DifferentialForm, Index
from app.models.models import FoliatedKind
from app.models.scalar import Chart, ScalarField
from app.models.structures import NondegReport


@dataclass(frozen=True)
class ProductChart:
    transverse: Tuple[str, ...]
    leaf: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "transverse", tuple(self.transverse))
        object.__setattr__(self, "leaf", tuple(self.leaf))
        if set(self.transverse) & set(self.leaf):
            raise GeometryError(f"Transverse and leaf coordinates overlap: {self.transverse} / {self.leaf}")
        if not self.leaf:
            raise GeometryError("A product chart needs at least one leaf coordinate")

    @cached_property
    def chart(self) -> Chart:
        return Chart(self.transverse + self.leaf)

    @property
    def q(self) -> int:
        return len(self.transverse)

    @property
    def leaf_dim(self) -> int:
        return len(self.leaf)

    @property
    def leaf_indices(self) -> Tuple[int, ...]:
        return tuple(range(self.q, self.q + self.leaf_dim))

    @cached_property
    def leaf_chart(self) -> Chart:
        return Chart(self.leaf)

    def is_leaf_index(self, idx: Index) -> bool:
        return all(i >= self.q for i in idx)


class FoliatedForm:
    """Section of the k-th exterior power of the cotangent bundle of the foliation."""

    def __init__(self, product: ProductChart, form: DifferentialForm):
        product.chart.require_same(form.chart)
        if form.degree > product.leaf_dim:
            raise GeometryError(f"Degree {form.degree} exceeds leaf dimension {product.leaf_dim}")
        for idx, _ in form.terms():
            if not product.is_leaf_index(idx):
                raise GeometryError(f"Foliated form has a transverse differential in {form.basis_text(idx)}")
        self.product = product
        self.form = form

    @classmethod
    def from_coeffs(cls, product: ProductChart, degree: int, coeffs: Mapping[Index, ScalarField]) -> "FoliatedForm":
        return cls(product, DifferentialForm(product.chart, degree, coeffs))

    @classmethod
    def zero(cls, product: ProductChart, degree: int) -> "FoliatedForm":
        return cls(product, DifferentialForm.zero(product.chart, degree))

    @property
    def degree(self) -> int:
        return self.form.degree

    @property
    def chart(self) -> Chart:
        return self.product.chart

    def terms(self):
        return self.form.terms()

    def coefficient(self, *idx: int) -> ScalarField:
        return self.form.coefficient(*idx)

    def is_zero(self) -> bool:
        return self.form.is_zero()

    def _wrap(self, form: DifferentialForm) -> "FoliatedForm":
        if form.is_zero() and form.degree > self.product.leaf_dim:
            form = DifferentialForm.zero(self.chart, self.product.leaf_dim)
        return FoliatedForm(self.product, form)

    def __add__(self, other: "FoliatedForm") -> "FoliatedForm":
        return self._wrap(self.form + other.form)

    def __neg__(self) -> "FoliatedForm":
        return FoliatedForm(self.product, -self.form)

    def __sub__(self, other: "FoliatedForm") -> "FoliatedForm":
        return self._wrap(self.form - other.form)

    def scale(self, f) -> "FoliatedForm":
        return FoliatedForm(self.product, self.form.scale(f))

    def wedge(self, other: "FoliatedForm") -> "FoliatedForm":
        return self._wrap(self.form.wedge(other.form))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FoliatedForm):
            return NotImplemented
        return self.product == other.product and self.form == other.form

    def __hash__(self) -> int:
        return hash((self.product, self.form))

    def to_text(self) -> str:
        return self.form.to_text()

    def __repr__(self) -> str:
        return f"FoliatedForm({self.to_text()!r}, degree={self.degree})"


@dataclass(frozen=True)
class FoliatedClassification:
    kind: FoliatedKind
    report: Optional[NondegReport] = None
    lee_form: Optional[FoliatedForm] = None


@dataclass(frozen=True)
class ContactFoliationReport:
    """Foliated-form contactness and leafwise contact-submanifold checks, reported separately."""

    classification: FoliatedClassification
    leaves_contact: List[bool]

    @property
    def form_is_contact(self) -> bool:
        return self.classification.kind is FoliatedKind.FOLIATED_CONTACT

    @property
    def agree(self) -> bool:
        return self.form_is_contact == all(self.leaves_contact)
