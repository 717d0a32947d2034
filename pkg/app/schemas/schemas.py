import math
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core.config import settings
from app.models.models import CheckKind, TaskKind, TaskStatus


# ============ GRID SCHEMAS ============

class GridSpec(BaseModel):
    """Axis-aligned box sampled with ``nodes`` points per axis, plus a time window."""
    bounds: List[Tuple[float, float]] = Field(..., min_length=1)
    nodes: int = Field(default_factory=lambda: settings.GRID_NODES, ge=2)
    t0: float = 0.0
    t1: float = 1.0
    h: float = Field(default_factory=lambda: settings.RK_STEP, gt=0)

    @field_validator('bounds')
    @classmethod
    def validate_bounds(cls, v):
        for lo, hi in v:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError('Grid bounds must be finite')
            if lo >= hi:
                raise ValueError(f'Grid axis [{lo}, {hi}] must have lo < hi')
        return v

    @field_validator('t1')
    @classmethod
    def validate_time_window(cls, v, info):
        if 't0' in info.data and v <= info.data['t0']:
            raise ValueError('Time window must satisfy t0 < t1')
        return v


# ============ SCENE SCHEMAS ============

class ProductChartSpec(BaseModel):
    transverse: List[str] = Field(default_factory=list)
    leaf: List[str] = Field(..., min_length=1)


class BumpSpec(BaseModel):
    """Radial bump; a plateau when ``inner`` is given."""
    center: List[float]
    radius: float = Field(..., gt=0)
    inner: Optional[float] = Field(None, gt=0)


class CutoffSpec(BaseModel):
    """Scalar expression multiplied by an optional bump: the ``r`` of a Gray step."""
    expr: str
    bump: Optional[BumpSpec] = None


class CheckTask(BaseModel):
    kind: Literal["check"] = "check"
    check: CheckKind
    form: Optional[str] = None
    forms: List[str] = Field(default_factory=list)
    bivector: Optional[str] = None
    vector: Optional[str] = None
    scalars: List[str] = Field(default_factory=list)
    map: List[str] = Field(default_factory=list)
    samples: Optional[List[List[Union[int, float, str]]]] = None
    expect: Optional[str] = None


class FlowTask(BaseModel):
    kind: Literal["flow"] = "flow"
    form: str = "alpha"
    H: str
    t: Tuple[float, float] = (0.0, 1.0)
    h: Optional[float] = Field(None, gt=0)
    seeds: List[List[float]] = Field(..., min_length=1)
    tangents: List[List[float]] = Field(default_factory=list)

    @field_validator('t')
    @classmethod
    def validate_window(cls, v):
        if v[0] >= v[1]:
            raise ValueError('Flow window must satisfy t0 < t1')
        return v


class DecomposeTask(BaseModel):
    kind: Literal["decompose"] = "decompose"
    form: str = "alpha"
    family: str
    cover: List[List[Tuple[float, float]]] = Field(..., min_length=1)
    margin: float = Field(0.1, gt=0)
    t: Tuple[float, float] = (0.0, 1.0)


class GrayStepTask(BaseModel):
    kind: Literal["graystep"] = "graystep"
    form: str = "alpha"
    r: CutoffSpec
    s: str
    epsilon: Optional[float] = Field(None, gt=0)


Task = Annotated[Union[CheckTask, FlowTask, DecomposeTask, GrayStepTask], Field(discriminator='kind')]


class Scene(BaseModel):
    """A chart, named objects written in the expression grammar, and tasks run in order."""
    coords: List[str] = Field(..., min_length=1)
    product: Optional[ProductChartSpec] = None
    scalars: Dict[str, str] = Field(default_factory=dict)
    forms: Dict[str, str] = Field(default_factory=dict)
    multivectors: Dict[str, str] = Field(default_factory=dict)
    grid: Optional[GridSpec] = None
    tasks: List[Task] = Field(default_factory=list)

    @field_validator('coords')
    @classmethod
    def validate_coords(cls, v):
        if len(set(v)) != len(v):
            raise ValueError('Coordinate names must be distinct')
        if 't' in v:
            raise ValueError("'t' is reserved for the time coordinate")
        return v

    @model_validator(mode='after')
    def validate_product(self):
        if self.product is not None and self.product.transverse + self.product.leaf != self.coords:
            raise ValueError('Product chart must list transverse then leaf coordinates, matching coords')
        return self


# ============ REPORT SCHEMAS ============

class Provenance(BaseModel):
    version: str
    seed: int
    grid: Optional[GridSpec] = None


class TaskEntry(BaseModel):
    index: int
    kind: TaskKind
    status: TaskStatus
    result: Dict[str, Any] = Field(default_factory=dict)
    residuals: Dict[str, float] = Field(default_factory=dict)
    detail: Optional[str] = None
    csv: Optional[str] = None
    provenance: Provenance


class Report(BaseModel):
    tasks: List[TaskEntry] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(entry.status == TaskStatus.PASS for entry in self.tasks)


# ============ RUN FLAGS ============

class RunFlags(BaseModel):
    """Command line overrides; unset fields fall back to settings."""
    out: Optional[str] = None
    grid: Optional[int] = Field(None, ge=2)
    tol: Optional[float] = Field(None, gt=0)
    seed: Optional[int] = None
    max_steps: Optional[int] = Field(None, ge=1)
