"""
Error hierarchy.

Every error carries a short machine code and a human-readable ``detail``;
the scene runner reports both in the task entry instead of aborting.
"""
from typing import Optional, Sequence


class GeometryError(Exception):
    code = "geometry_error"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def to_payload(self) -> dict:
        return {"code": self.code, "detail": self.detail}


class ExpressionSyntaxError(GeometryError):
    code = "syntax_error"

    def __init__(self, detail: str, position: int):
        super().__init__(f"{detail} at position {position}")
        self.position = position


class UnknownCoordinateError(GeometryError):
    code = "unknown_coordinate"

    def __init__(self, name: str, coords: Sequence[str], position: Optional[int] = None):
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"Unknown coordinate '{name}'{where}; chart has {', '.join(coords)}")
        self.name = name
        self.position = position


class ChartMismatchError(GeometryError):
    code = "chart_mismatch"


class DimensionMismatchError(GeometryError):
    code = "dimension_mismatch"


class PoleError(GeometryError):
    code = "pole"


class SingularSystemError(GeometryError):
    code = "singular_system"


class DegenerateStructureError(GeometryError):
    code = "degenerate"

    def __init__(self, detail: str, samples: Sequence = ()):
        super().__init__(detail)
        self.samples = list(samples)


class ParityError(GeometryError):
    code = "parity_mismatch"


class FlowBoundsError(GeometryError):
    code = "left_box"


class TransversalityError(GeometryError):
    code = "transversality_failure"

    def __init__(self, detail: str, nodes: Sequence[int] = ()):
        super().__init__(detail)
        self.nodes = list(nodes)


class DecompositionError(GeometryError):
    code = "decomposition_failure"


class SceneError(GeometryError):
    code = "scene_error"

    def __init__(self, detail: str, line: Optional[int] = None, column: Optional[int] = None):
        if line is not None:
            detail = f"{detail} (line {line}, column {column})"
        super().__init__(detail)
        self.line = line
        self.column = column


class ZeroFieldDivisionError(GeometryError, ZeroDivisionError):
    code = "division_by_zero"
