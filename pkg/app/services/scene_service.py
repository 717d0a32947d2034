"""
Scene runner: loads a JSON scene, dispatches its tasks and writes reports.

Each task is independent; a failing or erroring task is recorded in its
report entry and never aborts the ones after it.
"""
import csv
import json
import logging
import time
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from app import __version__
from app.core.config import Settings, settings
from app.core.exceptions import GeometryError, SceneError
from app.models.foliation import ProductChart
from app.models.graded import DifferentialForm, MultiVectorField, PolyMap
from app.models.models import CheckKind, FoliatedKind, StructureKind, TaskKind, TaskStatus
from app.models.scalar import Chart, Point, ScalarField
from app.models.structures import LCSPair, JacobiPair
from app.schemas.schemas import (
    CheckTask,
    DecomposeTask,
    FlowTask,
    GrayStepTask,
    GridSpec,
    Provenance,
    Report,
    RunFlags,
    Scene,
    TaskEntry,
)
from app.services.decomposition_service import primitive_decomposition
from app.services.extcalc_service import form_on_vectors
from app.services.flow_service import conformal_factor_check, integrate_contact_flow
from app.services.foliate_service import contact_foliation_report, foliated_classify, leaf_restrict, map_transversality_report
from app.services.geomstruct_service import (
    certify_contact,
    classify_2form,
    contact_gradient_frame,
    contact_hamiltonian,
    contact_vector_factor,
    hamiltonian_relations_check,
    is_contact,
    jacobi_check,
    jacobi_from_contact,
    poisson_from_symplectic,
    structure_from_nondeg_jacobi,
)
from app.services.grammar_service import parse_form, parse_multivector
from app.services.gray_service import gray_step
from app.services.numeric_fields import Bump, FormFamily, SymbolicField
from app.services.symexpr_service import parse_scalar

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
TIME_COORD = "t"
SAMPLE_RANGE = 3

Rows = List[List[float]]
CheckOutcome = Tuple[bool, str, dict]


# ============ LOADING ============

def _validation_summary(exc: ValidationError) -> str:
    """Field-level messages, one per pydantic error."""
    errors = []
    for error in exc.errors():
        loc = ".".join(str(part) for part in error.get("loc", ())) or "scene"
        msg = error.get("msg", "Invalid value")
        if "missing" in error.get("type", ""):
            msg = "This field is required"
        errors.append(f"{loc}: {msg}")
    if len(errors) == 1:
        return errors[0]
    return f"{len(errors)} validation errors: " + "; ".join(errors)


def load_scene(path) -> Scene:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneError(f"Cannot read scene file {path}: {exc.strerror}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"Invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno)
    try:
        return Scene.model_validate(data)
    except ValidationError as exc:
        raise SceneError(_validation_summary(exc))


def _exact(value):
    if isinstance(value, str):
        try:
            return Fraction(value)
        except ValueError:
            raise SceneError(f"Invalid sample coordinate {value!r}")
    return value


# ============ RUNNER ============

class SceneRunner:
    """Runs the tasks of one scene with settings overridden by the run flags."""

    def __init__(self, scene: Scene, flags: Optional[RunFlags] = None):
        flags = flags or RunFlags()
        overrides = {
            key: value
            for key, value in (
                ("GRID_NODES", flags.grid),
                ("TOL", flags.tol),
                ("SEED", flags.seed),
                ("MAX_STEPS", flags.max_steps),
            )
            if value is not None
        }
        self.settings: Settings = settings.model_copy(update=overrides)
        self.scene = scene
        self.grid_nodes = flags.grid
        self.chart = Chart(tuple(scene.coords))
        self.product = (
            ProductChart(tuple(scene.product.transverse), tuple(scene.product.leaf)) if scene.product else None
        )
        self.tables: Dict[int, Rows] = {}
        self._checks: Dict[CheckKind, Callable[[CheckTask, List[Point]], CheckOutcome]] = {
            CheckKind.CONTACT: self._check_contact,
            CheckKind.REEB: self._check_reeb,
            CheckKind.HAMILTONIAN: self._check_hamiltonian,
            CheckKind.CLASSIFY_2FORM: self._check_classify,
            CheckKind.POISSON: self._check_poisson,
            CheckKind.JACOBI: self._check_jacobi,
            CheckKind.DICHOTOMY: self._check_dichotomy,
            CheckKind.FOLIATED: self._check_foliated,
            CheckKind.TRANSVERSALITY: self._check_transversality,
            CheckKind.GRADIENT_FRAME: self._check_gradient_frame,
        }

    # ---- name resolution ----

    def form(self, name: Optional[str], chart: Optional[Chart] = None) -> DifferentialForm:
        if name is None or name not in self.scene.forms:
            raise SceneError(f"Undefined form '{name}'")
        return parse_form(self.scene.forms[name], chart or self.chart)

    def multivector(self, name: Optional[str]) -> MultiVectorField:
        if name is None or name not in self.scene.multivectors:
            raise SceneError(f"Undefined multivector '{name}'")
        return parse_multivector(self.scene.multivectors[name], self.chart)

    def scalar(self, name_or_expr: str, chart: Optional[Chart] = None) -> ScalarField:
        """A declared scalar by name, otherwise an inline expression."""
        text = self.scene.scalars.get(name_or_expr, name_or_expr)
        return parse_scalar(text, chart or self.chart)

    def contact(self, name: Optional[str], samples=()):
        return certify_contact(self.form(name), samples)

    def samples(self, task: CheckTask, index: int) -> List[Point]:
        if task.samples is not None:
            return [Point(self.chart, tuple(_exact(v) for v in row)) for row in task.samples]
        rng = np.random.default_rng([self.settings.SEED, index])
        draws = rng.integers(-SAMPLE_RANGE, SAMPLE_RANGE + 1, size=(self.settings.SAMPLE_COUNT, self.chart.dim))
        return [Point(self.chart, tuple(int(v) for v in row)) for row in draws]

    def grid(self, t: Optional[Tuple[float, float]] = None, h: Optional[float] = None) -> GridSpec:
        if self.scene.grid is None:
            raise SceneError("Numeric tasks need a scene grid")
        update = {} if self.grid_nodes is None else {"nodes": self.grid_nodes}
        if t is not None:
            update.update(t0=t[0], t1=t[1])
        if h is not None:
            update["h"] = h
        return GridSpec.model_validate({**self.scene.grid.model_dump(), **update})

    def _product(self) -> ProductChart:
        if self.product is None:
            raise SceneError("This check needs a product chart")
        return self.product

    # ---- checks ----

    def _check_contact(self, task, samples) -> CheckOutcome:
        report = is_contact(self.form(task.form), samples)
        return report.ok, report.status.value, report.to_json()

    def _check_reeb(self, task, samples) -> CheckOutcome:
        C = self.contact(task.form, samples)
        ok = task.vector is None or C.reeb == self.multivector(task.vector)
        return ok, "pass" if ok else "fail", {"reeb": C.reeb.to_text()}

    def _check_hamiltonian(self, task, samples) -> CheckOutcome:
        if len(task.scalars) != 1:
            raise SceneError("Hamiltonian check needs exactly one scalar")
        C = self.contact(task.form, samples)
        H = self.scalar(task.scalars[0])
        X = contact_hamiltonian(C, H)
        factor = contact_vector_factor(C, X)
        if task.vector is not None:
            ok = X == self.multivector(task.vector)
        else:
            ok = form_on_vectors(C.alpha, [X]) == H
        return ok, "pass" if ok else "fail", {"field": X.to_text(), "factor": factor.to_text()}

    def _check_classify(self, task, samples) -> CheckOutcome:
        result = classify_2form(self.form(task.form), samples)
        payload = {"kind": result.kind.value, "report": result.report.to_json()}
        if result.lee_form is not None:
            payload["lee_form"] = result.lee_form.to_text()
        ok = result.kind in (StructureKind.SYMPLECTIC, StructureKind.LCS)
        return ok, result.kind.value, payload

    def _check_poisson(self, task, samples) -> CheckOutcome:
        Lam = poisson_from_symplectic(self.form(task.form))
        check = jacobi_check(JacobiPair(Lam, MultiVectorField.zero(self.chart, 1)))
        return check.ok, "pass" if check.ok else "fail", {"bivector": Lam.to_text()}

    def _jacobi_pair(self, task) -> JacobiPair:
        if task.bivector is None and task.form is not None:
            return jacobi_from_contact(self.contact(task.form))
        return JacobiPair(self.multivector(task.bivector), self.multivector(task.vector))

    def _check_jacobi(self, task, samples) -> CheckOutcome:
        P = self._jacobi_pair(task)
        check = jacobi_check(P)
        payload = {
            "bivector": P.Lambda.to_text(),
            "vector": P.E.to_text(),
            "bracket_residual": check.bracket_residual.to_text(),
            "invariance_residual": check.invariance_residual.to_text(),
        }
        ok = check.ok
        if task.scalars:
            if len(task.scalars) != 2:
                raise SceneError("Hamiltonian relations need exactly two scalars")
            f, g = (self.scalar(s) for s in task.scalars)
            relations = hamiltonian_relations_check(P, f, g)
            payload["relations_residual"] = relations.bracket.to_text()
            ok = ok and relations.is_zero
        return ok, "pass" if ok else "fail", payload

    def _check_dichotomy(self, task, samples) -> CheckOutcome:
        structure = structure_from_nondeg_jacobi(self._jacobi_pair(task), samples)
        if isinstance(structure, LCSPair):
            payload = {"omega": structure.omega.to_text(), "theta": structure.theta.to_text()}
            return True, StructureKind.LCS.value, payload
        return True, StructureKind.CONTACT.value, {"alpha": structure.alpha.to_text()}

    def _check_foliated(self, task, samples) -> CheckOutcome:
        product = self._product()
        form = leaf_restrict(product, self.form(task.form))
        extra = leaf_restrict(product, self.form(task.forms[0])) if task.forms else None
        if form.degree == 1:
            result = foliated_classify(product, alpha=form, omega=extra, samples=samples)
        else:
            result = foliated_classify(product, omega=form, samples=samples)
        payload = {"kind": result.kind.value}
        if result.report is not None:
            payload["report"] = result.report.to_json()
        if result.lee_form is not None:
            payload["lee_form"] = result.lee_form.to_text()
        return result.kind is not FoliatedKind.NONE, result.kind.value, payload

    def _check_transversality(self, task, samples) -> CheckOutcome:
        C = self.contact(task.form)
        if task.map:
            components = [self.scalar(expr) for expr in task.map]
            target = Chart(tuple(f"u{i + 1}" for i in range(len(components))))
            flags = map_transversality_report(C, PolyMap(self.chart, target, components), samples)
            payload = {"samples": [p.to_json() for p in samples], "transverse": flags}
            return all(flags), "pass" if all(flags) else "fail", payload
        report = contact_foliation_report(C, self._product(), samples)
        payload = {
            "foliated_kind": report.classification.kind.value,
            "leaves_contact": report.leaves_contact,
            "agree": report.agree,
        }
        ok = report.form_is_contact and all(report.leaves_contact)
        return ok, "pass" if ok else "fail", payload

    def _check_gradient_frame(self, task, samples) -> CheckOutcome:
        C = self.contact(task.form)
        frame = contact_gradient_frame(C, [self.scalar(s) for s in task.scalars], samples)
        payload = {
            "frame": [X.to_text() for X in frame.frame],
            "top_coefficient": frame.top_coefficient.to_text(),
            "report": frame.report.to_json(),
        }
        return frame.is_symplectic, "symplectic" if frame.is_symplectic else "degenerate", payload

    # ---- tasks ----

    def _run_check(self, task: CheckTask, entry: dict) -> None:
        ok, label, payload = self._checks[task.check](task, self.samples(task, entry["index"]))
        payload["check"] = task.check.value
        entry["result"] = payload
        if task.expect is None:
            passed = ok
        elif task.expect.lower() in ("pass", "fail"):
            passed = ok == (task.expect.lower() == "pass")
        else:
            passed = label.lower() == task.expect.lower()
            if not passed:
                entry["detail"] = f"Expected {task.expect}, got {label}"
        entry["status"] = TaskStatus.PASS if passed else TaskStatus.FAIL

    def _run_flow(self, task: FlowTask, entry: dict) -> None:
        C = self.contact(task.form)
        H = self.scalar(task.H, self.chart.extended(TIME_COORD))
        grid = self.grid(task.t, task.h)
        entry["grid"] = grid
        result = integrate_contact_flow(C, H, np.array(task.seeds, dtype=float), grid)
        tangents = task.tangents or np.eye(self.chart.dim).tolist()
        residual = conformal_factor_check(result, C, tangents)
        index = entry["index"]
        self.tables[index] = list(result.rows())
        entry["csv"] = f"task-{index}.csv"
        entry["residuals"] = {"conformal": residual}
        entry["result"] = {
            "seeds": int(result.seeds.shape[0]),
            "steps": int(len(result.times) - 1),
            "final": result.trajectories[:, -1].tolist(),
            "lambda": result.lam[:, -1].tolist(),
        }
        entry["status"] = TaskStatus.PASS if residual < self.settings.TOL else TaskStatus.FAIL

    def _run_decompose(self, task: DecomposeTask, entry: dict) -> None:
        alpha0 = self.form(task.form)
        extended = self.chart.extended(TIME_COORD)
        family = FormFamily.from_form(self.form(task.family, extended), self.chart)
        grid = self.grid(task.t)
        entry["grid"] = grid
        result = primitive_decomposition(
            alpha0,
            family,
            task.cover,
            grid,
            margin=task.margin,
            max_steps=self.settings.MAX_STEPS,
            tol=self.settings.TOL,
        )
        entry["residuals"] = {
            "reconstruction": result.reconstruction_residual,
            "partition": result.partition_residual,
        }
        entry["result"] = {
            "n": result.n,
            "pairs": [[p.block, p.box, p.axis] for p in result.pairs],
            "min_strength": result.min_strength,
        }
        worst = max(result.reconstruction_residual, result.partition_residual)
        entry["status"] = TaskStatus.PASS if worst < self.settings.TOL else TaskStatus.FAIL

    def _run_graystep(self, task: GrayStepTask, entry: dict) -> None:
        C = self.contact(task.form)
        r = SymbolicField(self.scalar(task.r.expr))
        if task.r.bump is not None:
            bump = task.r.bump
            r = r * Bump(bump.center, bump.radius, bump.inner)
        s = SymbolicField(self.scalar(task.s))
        grid = self.grid()
        entry["grid"] = grid
        result = gray_step(C, r, s, grid, task.epsilon)
        entry["residuals"] = {
            "conformality": result.conformality_residual,
            "locality": result.locality_residual,
        }
        entry["result"] = {
            "nodes": int(result.nodes.shape[0]),
            "support_nodes": int(np.count_nonzero(result.support_mask)),
            "max_displacement": float(np.max(np.abs(result.f1 - result.nodes))),
        }
        worst = max(result.conformality_residual, result.locality_residual)
        entry["status"] = TaskStatus.PASS if worst < self.settings.TOL else TaskStatus.FAIL

    def run_task(self, index: int, task) -> TaskEntry:
        entry = {"index": index, "kind": TaskKind(task.kind), "grid": self.scene.grid}
        handlers = {
            TaskKind.CHECK: self._run_check,
            TaskKind.FLOW: self._run_flow,
            TaskKind.DECOMPOSE: self._run_decompose,
            TaskKind.GRAYSTEP: self._run_graystep,
        }
        start = time.time()
        try:
            handlers[entry["kind"]](task, entry)
        except GeometryError as exc:
            entry["status"] = TaskStatus.ERROR
            entry["detail"] = exc.detail
            entry["result"] = {"code": exc.code}
        except Exception as exc:
            logger.exception(f"Unexpected failure in task {index}")
            entry["status"] = TaskStatus.ERROR
            entry["detail"] = f"Internal error: {exc}"
            entry["result"] = {"code": "internal_error"}
        elapsed = (time.time() - start) * 1000
        logger.info(f"[task {index}] {entry['kind'].value} - {entry['status'].value} - {elapsed:.2f}ms")

        grid = entry.pop("grid")
        entry["provenance"] = Provenance(version=__version__, seed=self.settings.SEED, grid=grid)
        if entry["status"] is not TaskStatus.PASS:
            self.tables.pop(index, None)
            entry.pop("csv", None)
        return TaskEntry(**entry)

    def run(self) -> Report:
        return Report(tasks=[self.run_task(index, task) for index, task in enumerate(self.scene.tasks)])


# ============ OUTPUT ============

def emit_formats(report: Report, out_dir, coords, tables: Optional[Dict[int, Rows]] = None) -> Path:
    """Write report.json and one CSV per flow task into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / REPORT_FILE
        path.write_text(report.model_dump_json(indent=2, exclude_none=True) + "\n", encoding="utf-8")
        for entry in report.tasks:
            if entry.csv is None or entry.index not in (tables or {}):
                continue
            with open(out / entry.csv, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(["t", *coords, "lambda"])
                writer.writerows(tables[entry.index])
    except OSError as exc:
        raise SceneError(f"Cannot write reports to {out}: {exc.strerror}")
    return path


def run_scene(path, flags: Optional[RunFlags] = None) -> Report:
    """Load, run and (when ``flags.out`` is set) write the reports of a scene."""
    flags = flags or RunFlags()
    scene = load_scene(path)
    runner = SceneRunner(scene, flags)
    report = runner.run()
    if flags.out is not None:
        emit_formats(report, flags.out, scene.coords, runner.tables)
    failed = sum(1 for entry in report.tasks if entry.status is not TaskStatus.PASS)
    logger.info(f"scene {path}: {len(report.tasks) - failed} of {len(report.tasks)} tasks passed")
    return report
