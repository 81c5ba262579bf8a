"""Experiment orchestration: evaluations, optimizer runs, sweeps and heatmaps,
plus CSV/JSON report emission."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import gwo, manifold
from .baseline import ebs_schedule, quantize_schedule
from .fim import PebModel
from .geometry import GeometryError
from .scenario import (Scenario, ScenarioError, db_to_linear, derive_rng, fingerprint,
                       ris_progression)
from .schedule import PhaseSchedule

log = logging.getLogger(__name__)

MODES = ("eval", "optimize-continuous", "optimize-discrete", "sweep", "heatmap")
AXES = ("power", "measurements", "elements", "bits", "ris-count")
METHODS = ("CPSOA-RM", "EBS", "DPSOA-I-GWO", "discrete-EBS", "random")
HEADER = ("scenario", "method", "axis", "value", "peb_m", "iters", "wall_ms", "seed")

DEFAULT_METHODS = {
    "eval": ("EBS", "random"),
    "optimize-continuous": ("CPSOA-RM", "EBS"),
    "optimize-discrete": ("DPSOA-I-GWO", "discrete-EBS"),
    "sweep": ("CPSOA-RM", "EBS", "random"),
    "heatmap": ("CPSOA-RM",),
}


class DegenerateEverywhereError(RuntimeError):
    """Every cell of the experiment was degenerate (no finite PEB anywhere)."""


@dataclass(frozen=True)
class Budget:
    """Optimizer settings for a run; heatmap cells use the ``cell_*`` variants."""

    name: str
    manifold: manifold.ManifoldConfig
    wolves: int
    iterations: int
    cell_manifold: manifold.ManifoldConfig
    cell_wolves: int
    cell_iterations: int


def _cg(iterations: int) -> manifold.ManifoldConfig:
    # scale-free stopping so scenes with very different PEB levels are treated alike
    return manifold.ManifoldConfig(tolerance=0.01, relative=True, max_iterations=iterations)


BUDGETS = {
    "full": Budget("full", _cg(2000), 100, 1000, _cg(300), 30, 200),
    "quick": Budget("quick", _cg(300), 30, 200, _cg(100), 20, 50),
    "coarse": Budget("coarse", _cg(100), 20, 50, _cg(60), 10, 20),
}


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: Scenario
    mode: str = "eval"
    axis: str | None = None
    values: tuple[float, ...] = ()
    methods: tuple[str, ...] | None = None
    seeds: tuple[int, ...] = (0,)
    bits: int = 2
    grid: tuple[int, int] = (40, 25)
    x_range: tuple[float, float] = (0.0, 8.0)
    y_range: tuple[float, float] = (0.0, 5.0)
    plane_z: float = 1.0
    budget: str = "full"
    workers: int = 1
    record_timing: bool = True
    output: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ScenarioError("mode", f"unknown mode {self.mode!r}")
        if self.axis is not None and self.axis not in AXES:
            raise ScenarioError("axis", f"unknown axis {self.axis!r}; choose from {', '.join(AXES)}")
        if self.mode == "sweep" and (self.axis is None or not self.values):
            raise ScenarioError("values", "a sweep needs an axis and at least one value")
        if self.axis is not None and not self.values:
            raise ScenarioError("values", "axis given without values")
        if self.budget not in BUDGETS:
            raise ScenarioError("budget", f"unknown preset {self.budget!r}; choose from {', '.join(BUDGETS)}")
        for m in self.active_methods:
            if m not in METHODS:
                raise ScenarioError("methods", f"unknown method {m!r}")
        if not self.seeds:
            raise ScenarioError("seeds", "need at least one seed")
        if self.mode == "heatmap" and min(self.grid) < 2:
            raise ScenarioError("grid", "heatmap resolution must be at least 2 x 2")
        if not 1 <= self.bits <= gwo.MAX_BITS:
            raise ScenarioError("bits", f"must be between 1 and {gwo.MAX_BITS}")
        if self.axis is not None:
            for v in self.values:
                axis_scenario(self.scenario, self.axis, v)   # validate early

    @property
    def active_methods(self) -> tuple[str, ...]:
        if self.methods is not None:
            return tuple(self.methods)
        if self.axis == "bits":
            return ("DPSOA-I-GWO", "discrete-EBS")
        return DEFAULT_METHODS[self.mode]


@dataclass
class ReportRow:
    scenario: str
    method: str
    axis: str
    value: str | float
    peb_m: float
    iters: int
    wall_ms: float
    seed: int

    def fields(self) -> list[str]:
        return [self.scenario, self.method, self.axis, _fmt(self.value), _fmt(self.peb_m),
                str(self.iters), _fmt(self.wall_ms), str(self.seed)]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".9g")


def _num(s: str):
    try:
        return float(s)
    except ValueError:
        return s


# ---------------------------------------------------------------------------
# scene variants


def axis_scenario(scenario: Scenario, axis: str, value) -> Scenario:
    """Scene for one sweep value. ``bits`` leaves the scene unchanged."""
    if axis == "power":
        return replace(scenario, ap=replace(scenario.ap, transmit_power=db_to_linear(float(value))))
    if axis == "measurements":
        n = float(value)
        if n != int(n) or n < 1:
            raise ScenarioError("values", f"measurement count must be a positive integer, got {value}")
        return replace(scenario, num_measurements=int(n))
    if axis == "elements":
        k = float(value)
        if k != int(k) or k < 1:
            raise ScenarioError("values", f"elements per side must be a positive integer, got {value}")
        return scenario.with_panels([replace(p, rows=int(k), cols=int(k))
                                     for p in scenario.ris_panels])
    if axis == "bits":
        b = float(value)
        if b != int(b) or not 1 <= b <= gwo.MAX_BITS:
            raise ScenarioError("values", f"bits must be an integer in 1..{gwo.MAX_BITS}, got {value}")
        return scenario
    if axis == "ris-count":
        k = float(value)
        if k != int(k) or not 1 <= k <= 4:
            raise ScenarioError("values", f"RIS count must be 1..4, got {value}")
        first = scenario.ris_panels[0]
        panels = list(scenario.ris_panels)
        panels += ris_progression(4, first.rows, first.cols)[len(panels):]
        return scenario.with_panels(panels[:int(k)])
    raise ScenarioError("axis", f"unknown axis {axis!r}")


def heatmap_points(spec: ExperimentSpec) -> list[tuple[float, float, float]]:
    """Cell centers of the W x H grid, x fastest."""
    w, h = spec.grid
    (x0, x1), (y0, y1) = spec.x_range, spec.y_range
    xs = x0 + (np.arange(w) + 0.5) * (x1 - x0) / w
    ys = y0 + (np.arange(h) + 0.5) * (y1 - y0) / h
    return [(float(x), float(y), float(spec.plane_z)) for y in ys for x in xs]


# ---------------------------------------------------------------------------
# one method on one scene


def _model(scenario: Scenario) -> PebModel | None:
    try:
        model = PebModel(scenario, skip_degenerate=True)
    except GeometryError:
        return None
    return None if model.degenerate else model


def evaluate_method(scenario: Scenario, method: str, seed: int, bits: int,
                    spec_budget: Budget, cell: bool = False) -> tuple[float, int]:
    """(PEB, iterations) of ``method``; +inf with 0 iterations on a degenerate scene."""
    model = _model(scenario)
    if model is None:
        return math.inf, 0
    if method == "EBS":
        return model.peb(ebs_schedule(scenario).blocks), 0
    if method == "discrete-EBS":
        return model.peb(quantize_schedule(ebs_schedule(scenario), bits).blocks), 0
    if method == "random":
        sched = PhaseSchedule.random(scenario, derive_rng(seed, "random-schedule"))
        return model.peb(sched.blocks), 0
    try:
        if method == "CPSOA-RM":
            cfg = spec_budget.cell_manifold if cell else spec_budget.manifold
            rep = manifold.optimize(scenario, seed=seed, config=cfg, model=model)
        elif method == "DPSOA-I-GWO":
            cfg = gwo.GwoConfig(bits=bits,
                                wolves=spec_budget.cell_wolves if cell else spec_budget.wolves,
                                iterations=spec_budget.cell_iterations if cell else spec_budget.iterations)
            rep = gwo.optimize(scenario, cfg, seed=seed, model=model)
        else:
            raise ScenarioError("methods", f"unknown method {method!r}")
    except manifold.DegenerateScenarioError:
        return math.inf, 0
    return rep.peb, rep.iterations


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class Cell:
    index: int
    scenario: Scenario
    axis: str
    value: str | float
    seed: int
    bits: int
    heatmap: bool = False


def _cells(spec: ExperimentSpec) -> list[Cell]:
    axis_values = [(spec.axis, v) for v in spec.values] if spec.axis else [("none", "")]
    cells = []
    for axis, v in axis_values:
        scene = spec.scenario if axis == "none" else axis_scenario(spec.scenario, axis, v)
        bits = int(v) if axis == "bits" else spec.bits
        label = "" if axis == "none" else float(v)
        for seed in spec.seeds:
            if spec.mode == "heatmap":
                for x, y, z in heatmap_points(spec):
                    pos = f"{_fmt(x)}:{_fmt(y)}:{_fmt(z)}"
                    value = pos if axis == "none" else f"{_fmt(label)}@{pos}"
                    cells.append(Cell(len(cells), scene.with_ue([x, y, z]),
                                      "ue" if axis == "none" else f"{axis}@ue", value, seed, bits, True))
            else:
                cells.append(Cell(len(cells), scene, axis, label, seed, bits))
    return cells


def _run_cell(args) -> list[ReportRow]:
    cell, methods, budget_name, record_timing = args
    budget = BUDGETS[budget_name]
    fp = fingerprint(cell.scenario)
    rows = []
    for method in methods:
        t0 = time.perf_counter()
        peb, iters = evaluate_method(cell.scenario, method, cell.seed, cell.bits, budget, cell.heatmap)
        wall = (time.perf_counter() - t0) * 1e3 if record_timing else 0.0
        rows.append(ReportRow(fp, method, cell.axis, cell.value, peb, iters, wall, cell.seed))
    log.info("cell %d %s=%s seed %d: %s", cell.index, cell.axis, cell.value, cell.seed,
             ", ".join(f"{r.method} {_fmt(r.peb_m)}" for r in rows))
    return rows


def run(spec: ExperimentSpec) -> list[ReportRow]:
    """Execute every (axis value x seed [x heatmap point]) cell for every method.

    Rows come out in cell order, then method order, whatever the worker count.
    Raises :class:`DegenerateEverywhereError` if no row has a finite PEB.
    """
    cells = _cells(spec)
    jobs = [(c, spec.active_methods, spec.budget, spec.record_timing) for c in cells]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(_run_cell, jobs))
    else:
        chunks = [_run_cell(j) for j in jobs]
    rows = [r for chunk in chunks for r in chunk]
    if not any(math.isfinite(r.peb_m) for r in rows):
        raise DegenerateEverywhereError("no finite PEB in any cell: the UE sees no usable RIS")
    return rows


def worst_cell(rows: list[ReportRow], method: str) -> float:
    """Largest PEB over the rows of one method (the heatmap's worst point)."""
    return max(r.peb_m for r in rows if r.method == method)


# ---------------------------------------------------------------------------
# reports


def to_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in rows:
        writer.writerow(r.fields())
    return buf.getvalue()


def to_json(rows: list[ReportRow]) -> str:
    """Array of row objects; floats carry 9 significant digits and +inf is ``"inf"``."""
    out = []
    for r in rows:
        rec = {}
        for key, text in zip(HEADER, r.fields()):
            if key in ("iters", "seed"):
                rec[key] = int(text)
            elif key in ("scenario", "method", "axis") or text in ("inf", "-inf"):
                rec[key] = text
            else:
                rec[key] = _num(text)
        out.append(rec)
    return json.dumps(out, indent=1) + "\n"


def emit(rows: list[ReportRow], fmt: str = "csv", path=None) -> str:
    """Serialize ``rows``; writes to ``path`` when given and returns the text."""
    if not rows:
        raise ValueError("nothing to emit")
    if fmt == "csv":
        text = to_csv(rows)
    elif fmt == "json":
        text = to_json(rows)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _row(rec: dict) -> ReportRow:
    return ReportRow(str(rec["scenario"]), str(rec["method"]), str(rec["axis"]),
                     _num(rec["value"]) if isinstance(rec["value"], str) else float(rec["value"]),
                     float(rec["peb_m"]), int(rec["iters"]), float(rec["wall_ms"]), int(rec["seed"]))


def parse(text: str, fmt: str = "csv") -> list[ReportRow]:
    """Inverse of :func:`emit` (up to the 9-digit rounding)."""
    if fmt == "json":
        return [_row(rec) for rec in json.loads(text)]
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != HEADER:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    return [_row(rec) for rec in reader]


def rounded(rows: list[ReportRow]) -> list[ReportRow]:
    """Rows as they read back after emission (9 significant digits)."""
    return parse(to_csv(rows))
