"""Convergence studies, result tables and CSV input/output."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .elliptic import LinearSolveParams
from .errors import ConfigError, GridError, KHessianError
from .grid import Grid, MeshFunction, build_grid
from .iterations import IterationConfig, SolveReport, check_method, solve
from .problems import Problem, make_problem, max_error

CSV_HEADER = ("m", "h", "iterations", "residual", "max_error", "rate")
AXES = {"x": 0, "y": 1, "z": 2}


@dataclass
class StudyRow:
    m: int
    h: float
    iterations: int
    residual: float
    max_error: Optional[float] = None
    rate: Optional[float] = None


@dataclass
class RunConfig:
    problem: str
    method: str = "fixed-point"
    ms: Sequence[int] = (8,)
    tol: float = 1e-10
    max_iter: Optional[int] = None
    lin_tol: float = 1e-12
    lin_method: str = "direct"
    init: str = "paper"

    def __post_init__(self):
        self.ms = tuple(int(m) for m in self.ms)
        if not self.ms or min(self.ms) < 2:
            raise ConfigError("grid sizes m must be at least 2")
        check_method(self.method, self.make_problem())
        self.iteration_config()

    def make_problem(self) -> Problem:
        return make_problem(self.problem)

    def iteration_config(self) -> IterationConfig:
        return IterationConfig(tol=self.tol, max_iter=self.max_iter, init=self.init,
                               linear=LinearSolveParams(tol=self.lin_tol, method=self.lin_method))


class StudyError(KHessianError):
    """A study row failed; ``rows`` holds the rows completed before it."""

    def __init__(self, message, rows, report=None):
        super().__init__(message)
        self.rows = rows
        self.report = report


def convergence_rate(coarse: Optional[float], fine: Optional[float]) -> Optional[float]:
    if coarse is None or fine is None or not (coarse > 0 and fine > 0):
        return None
    return math.log2(coarse / fine)


def with_rates(rows: list[StudyRow]) -> list[StudyRow]:
    for prev, row in zip(rows, rows[1:]):
        row.rate = convergence_rate(prev.max_error, row.max_error)
    if rows:
        rows[0].rate = None
    return rows


def solve_one(config: RunConfig, m: int) -> tuple[MeshFunction, SolveReport, StudyRow]:
    problem = config.make_problem()
    grid = build_grid(problem.n, m)
    u, report = solve(problem, grid, config.method, config.iteration_config())
    err = max_error(u, problem) if problem.exact is not None else None
    res = report.residuals[-1] if report.residuals else float("nan")
    return u, report, StudyRow(m, grid.h, report.iterations, res, err)


def run_convergence_study(config: RunConfig) -> list[StudyRow]:
    """Solve every grid size independently and attach rates between neighbours."""
    rows: list[StudyRow] = []
    for m in sorted(config.ms):
        try:
            _, report, row = solve_one(config, m)
        except KHessianError as exc:
            raise StudyError(f"m={m}: {exc}", with_rates(rows)) from exc
        if not report.converged:
            raise StudyError(f"m={m}: {config.method} {report.termination} after "
                             f"{report.iterations} iterations", with_rates(rows), report)
        rows.append(row)
    return with_rates(rows)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.5g}"


def render_csv(rows: Sequence[StudyRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(r.m), _fmt(r.h), _fmt(r.iterations), _fmt(r.residual),
                    _fmt(r.max_error), _fmt(r.rate)])
    return buf.getvalue()


def render_text(rows: Sequence[StudyRow]) -> str:
    cells = [list(CSV_HEADER)] + [
        [_fmt(r.m), _fmt(r.h), _fmt(r.iterations), _fmt(r.residual), _fmt(r.max_error),
         _fmt(r.rate)] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(CSV_HEADER))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_table(rows: Sequence[StudyRow]) -> tuple[str, str]:
    if not rows:
        raise ValueError("no rows to render")
    return render_text(rows), render_csv(rows)


def parse_csv(text: str) -> list[StudyRow]:
    def opt(s):
        return float(s) if s else None

    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(StudyRow(int(rec["m"]), float(rec["h"]), int(rec["iterations"]),
                             float(rec["residual"]), opt(rec["max_error"]), opt(rec["rate"])))
    return rows


# --- fields and slices --------------------------------------------------------

def field_csv(u: MeshFunction) -> str:
    """All nodes in node order, coordinates and value with 17 significant digits."""
    grid = u.grid
    coords = [c.ravel(order="F") for c in grid.coordinates()]
    vals = u.flat
    buf = io.StringIO()
    buf.write(",".join([f"x{i + 1}" for i in range(grid.n)] + ["u"]) + "\n")
    for p in range(grid.num_nodes):
        buf.write(",".join(f"{c[p]:.17g}" for c in coords) + f",{vals[p]:.17g}\n")
    return buf.getvalue()


def read_field_csv(text: str) -> MeshFunction:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    n = len(header) - 1
    if n not in (2, 3) or header[-1] != "u":
        raise GridError(f"unrecognised field header {header}")
    data = np.array([[float(v) for v in row] for row in reader if row])
    m = round(len(data) ** (1.0 / n)) - 1
    grid = build_grid(n, m)
    if len(data) != grid.num_nodes:
        raise GridError(f"{len(data)} rows is not a full grid in {n} dimensions")
    idx = np.rint(data[:, :n] * m).astype(int)
    vals = np.full(grid.shape, np.nan)
    vals[tuple(idx.T)] = data[:, n]
    if np.isnan(vals).any():
        raise GridError("field file does not cover every node")
    return MeshFunction(grid, vals)


def export_slice(u: MeshFunction, axis: str | int, value: float) -> str:
    """CSV of the plane ``x_axis = value``: remaining coordinates then ``u``."""
    grid = u.grid
    ax = AXES[axis] if isinstance(axis, str) else int(axis)
    if not 0 <= ax < grid.n:
        raise GridError(f"axis {axis!r} not in a {grid.n}-dimensional grid")
    j = round(value * grid.m)
    if abs(value * grid.m - j) > 1e-9 or not 0 <= j <= grid.m:
        raise GridError(f"slice plane not on grid: {value} with m={grid.m}")
    idx = [slice(None)] * grid.n
    idx[ax] = j
    plane = u.values[tuple(idx)]
    rest = [a for a in range(grid.n) if a != ax]
    axis1d = np.arange(grid.m + 1) / grid.m
    coords = np.meshgrid(*([axis1d] * len(rest)), indexing="ij")
    buf = io.StringIO()
    buf.write(",".join([f"x{a + 1}" for a in rest] + ["u"]) + "\n")
    for c_and_v in zip(*[c.ravel(order="F") for c in coords], plane.ravel(order="F")):
        buf.write(",".join(f"{v:.17g}" for v in c_and_v) + "\n")
    return buf.getvalue()
