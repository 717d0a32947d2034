"""
Value types for geometric structures and their reports.

Certified types (ContactData, LCSPair, JacobiPair returned by the services)
are frozen and carry the derived data computed when they were certified.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from app.models.graded import DifferentialForm, MultiVectorField
from app.models.models import NondegStatus, StructureKind
from app.models.scalar import Chart, Number, Point, ScalarField

Matrix = Tuple[Tuple[ScalarField, ...], ...]


@dataclass(frozen=True)
class NondegReport:
    top_power: ScalarField
    identically_zero: bool
    sample_failures: List[Point] = field(default_factory=list)
    samples_checked: int = 0

    @property
    def status(self) -> NondegStatus:
        if self.identically_zero:
            return NondegStatus.IDENTICALLY_DEGENERATE
        if self.sample_failures:
            return NondegStatus.DEGENERATE_AT_SAMPLES
        return NondegStatus.NONDEGENERATE

    @property
    def ok(self) -> bool:
        return self.status is NondegStatus.NONDEGENERATE

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "top_power": self.top_power.to_text(),
            "sample_failures": [p.to_json() for p in self.sample_failures],
        }


@dataclass(frozen=True)
class ContactReport(NondegReport):
    top_form: Optional[DifferentialForm] = None

    def to_json(self) -> dict:
        payload = super().to_json()
        payload["top_form"] = self.top_form.to_text() if self.top_form is not None else None
        return payload


@dataclass(frozen=True)
class ContactData:
    """Certified contact form with its differential, Reeb field and the matrix of phi^-1."""

    chart: Chart
    alpha: DifferentialForm
    d_alpha: DifferentialForm
    reeb: MultiVectorField
    n: int
    phi_inverse_matrix: Matrix = field(repr=False, compare=False, default=())


@dataclass(frozen=True)
class LCSPair:
    omega: DifferentialForm
    theta: DifferentialForm

    @property
    def chart(self) -> Chart:
        return self.omega.chart


@dataclass(frozen=True)
class JacobiPair:
    Lambda: MultiVectorField
    E: MultiVectorField

    def __post_init__(self):
        self.Lambda.chart.require_same(self.E.chart)

    @property
    def chart(self) -> Chart:
        return self.Lambda.chart


@dataclass(frozen=True)
class JacobiCheck:
    bracket_ok: bool
    invariance_ok: bool
    bracket_residual: MultiVectorField
    invariance_residual: MultiVectorField

    @property
    def ok(self) -> bool:
        return self.bracket_ok and self.invariance_ok


@dataclass(frozen=True)
class HamiltonianResiduals:
    invariance: MultiVectorField
    bracket: MultiVectorField

    @property
    def is_zero(self) -> bool:
        return self.invariance.is_zero() and self.bracket.is_zero()


@dataclass(frozen=True)
class TwoFormClassification:
    kind: StructureKind
    report: NondegReport
    lee_form: Optional[DifferentialForm] = None


@dataclass(frozen=True)
class GradientFrame:
    frame: List[MultiVectorField]
    pairing: List[List[ScalarField]]
    top_coefficient: ScalarField
    report: NondegReport

    @property
    def is_symplectic(self) -> bool:
        return self.report.ok


@dataclass(frozen=True)
class JetPoint:
    """Affine coordinates (a_i, a_ij) of a 1-jet of a 1-form at a point."""

    a: Tuple[Number, ...]
    A: Tuple[Tuple[Number, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.a)
