"""Nonlinear iterations for the discrete k-Hessian equation ``S_k(H_d u) = f``.

Every solver returns ``(u, report)``. Running out of iterations or blowing
up is reported through ``report.termination``; only conditions that make a
step impossible (negative radicand with clamping off, singular linear
systems) raise.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _kernels
from .algebra import c_const, check_order, eigenvalues_sym, s_k, s_k_gradient
from .elliptic import (LinearSolveParams, assemble_divergence_form, assemble_laplacian,
                       assemble_nondivergence_form, extend_to_nodes, linear_solve)
from .errors import ConfigError, IterationError, KHessianError, LinearSolveError, SolverBreakdown
from .grid import Grid, MeshFunction, hessian_field, laplacian_field
from .problems import Problem

log = logging.getLogger(__name__)

CONVERGED, EXHAUSTED, DIVERGED = "converged", "budget-exhausted", "diverged"

DEFAULT_MAX_ITER = {
    "fixed-point": 2000,
    "broyden": 2000,
    "newton": 50,
    "gauss-seidel": 200000,
    "partial-gs": 200000,
    "degenerate-ma": 2000,
}


@dataclass(frozen=True)
class IterationConfig:
    tol: float = 1e-10
    max_iter: Optional[int] = None
    linear: LinearSolveParams = field(default_factory=LinearSolveParams)
    clamp: bool = True
    init: str = "paper"
    c_override: Optional[float] = None
    divergence_bound: float = 1e8

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError("outer tolerance must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")
        if self.init not in ("paper", "maclaurin"):
            raise ConfigError(f"unknown initial-guess rule {self.init!r}")

    def budget(self, method: str) -> int:
        return self.max_iter if self.max_iter is not None else DEFAULT_MAX_ITER[method]


@dataclass
class SolveReport:
    method: str
    iterations: int = 0
    residuals: list = field(default_factory=list)
    diffs: list = field(default_factory=list)
    min_laplacian: list = field(default_factory=list)
    termination: str = EXHAUSTED
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.termination == CONVERGED

    def record(self, diff: float, res: float, min_lap: float):
        self.iterations += 1
        self.diffs.append(float(diff))
        self.residuals.append(float(res))
        self.min_laplacian.append(float(min_lap))


# --- residuals and starting points -------------------------------------------

def residual_field(values: np.ndarray, grid: Grid, k: int, f_int: np.ndarray) -> np.ndarray:
    return s_k(hessian_field(values, grid), k) - f_int


def residual(u: MeshFunction, problem: Problem) -> float:
    """Max over interior nodes of ``|S_k(H_d u) - f|``."""
    r = residual_field(u.values, u.grid, problem.k, problem.f_interior(u.grid))
    return float(np.max(np.abs(r)))


def _inv_c(k: int, n: int, override) -> float:
    c = Fraction(override) if override is not None else c_const(k, n)
    return float(1 / c)


def initial_guess(problem: Problem, grid: Grid, rule: str = "paper",
                  params: LinearSolveParams | None = None) -> MeshFunction:
    """Poisson solve with ``2 sqrt(f)`` ("paper") or ``(f / c)^(1/k)`` ("maclaurin")."""
    f = problem.f_interior(grid)
    if np.any(f < 0):
        raise KHessianError("negative right-hand side")
    if rule == "paper":
        rhs = 2.0 * np.sqrt(f)
    elif rule == "maclaurin":
        rhs = (f * _inv_c(problem.k, problem.n, None)) ** (1.0 / problem.k)
    else:
        raise ConfigError(f"unknown initial-guess rule {rule!r}")
    return linear_solve(assemble_laplacian(grid), rhs, problem.boundary(grid), params)


def _check_problem(problem: Problem, grid: Grid):
    if problem.n != grid.n:
        raise ConfigError(f"problem dimension {problem.n} does not match grid dimension {grid.n}")
    check_order(problem.k, problem.n)


# --- generic outer loop --------------------------------------------------------

def _outer_loop(step, u: np.ndarray, grid: Grid, k: int, f_int: np.ndarray,
                config: IterationConfig, report: SolveReport, budget: int,
                residual_k: int | None = None):
    rk = residual_k or k
    for _ in range(budget):
        new = step(u)
        diff = float(np.max(np.abs(new - u)))
        u = new
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > config.divergence_bound:
            report.record(diff, float("inf"), float("nan"))
            report.termination = DIVERGED
            return u
        res = float(np.max(np.abs(residual_field(u, grid, rk, f_int))))
        report.record(diff, res, float(np.min(laplacian_field(u, grid))))
        log.debug("%s step %d: diff %.3e residual %.3e", report.method, report.iterations, diff, res)
        if diff <= config.tol:
            report.termination = CONVERGED
            return u
    report.termination = EXHAUSTED
    return u


def _start(problem, grid, config, u0=None) -> np.ndarray:
    g = problem.boundary(grid)
    if u0 is None:
        u0 = initial_guess(problem, grid, config.init, config.linear)
    u = u0.values.copy()
    bmask = grid.boundary_mask()
    u[bmask] = g.values[bmask]
    return u


# --- fixed point on the Laplacian --------------------------------------------

def _fixed_point_arrays(grid: Grid, k: int, f_int: np.ndarray, g: MeshFunction,
                        u: np.ndarray, config: IterationConfig, report: SolveReport,
                        budget: int) -> np.ndarray:
    inv_c = _inv_c(k, grid.n, config.c_override)
    lap_op = assemble_laplacian(grid)

    def step(v):
        lap = laplacian_field(v, grid)
        rad = lap ** k + inv_c * (f_int - s_k(hessian_field(v, grid), k))
        if np.any(rad < 0):
            if not config.clamp:
                idx = np.unravel_index(int(np.argmin(rad)), grid.interior_shape)
                raise IterationError(
                    f"radicand negative at node {tuple(int(i) + 1 for i in idx)}: {rad.min():.3e}")
            rad = np.maximum(rad, 0.0)
        rhs = rad ** (1.0 / k)
        return linear_solve(lap_op, rhs, g, config.linear).values

    return _outer_loop(step, u, grid, k, f_int, config, report, budget)


def fixed_point_solve(problem: Problem, grid: Grid, config: IterationConfig | None = None,
                      u0: MeshFunction | None = None):
    """Subharmonicity-preserving iteration: one Poisson solve per step."""
    config = config or IterationConfig()
    _check_problem(problem, grid)
    report = SolveReport("fixed-point")
    u = _fixed_point_arrays(grid, problem.k, problem.f_interior(grid), problem.boundary(grid),
                            _start(problem, grid, config, u0), config, report,
                            config.budget("fixed-point"))
    return MeshFunction(grid, u), report


# --- linearizations ------------------------------------------------------------

def linearized_cofactor_solve(problem: Problem, grid: Grid, u0: MeshFunction | None = None,
                              config: IterationConfig | None = None):
    """Divergence-form iteration with the coefficient frozen at ``u0``."""
    config = config or IterationConfig()
    _check_problem(problem, grid)
    k = problem.k
    f_int = problem.f_interior(grid)
    u = _start(problem, grid, config, u0)
    H0 = extend_to_nodes(grid, hessian_field(u, grid))
    A0 = s_k_gradient(H0, k)
    report = SolveReport("broyden")
    report.extra["min_coefficient_eigenvalue"] = float(
        eigenvalues_sym(A0[grid.interior])[..., 0].min())
    op = assemble_divergence_form(grid, A0)

    def step(v):
        rhs = -residual_field(v, grid, k, f_int)
        try:
            delta = linear_solve(op, rhs, None, config.linear)
        except (SolverBreakdown, RuntimeError) as exc:
            raise IterationError(f"frozen coefficient not elliptic: {exc}") from exc
        return v + delta.values

    u = _outer_loop(step, u, grid, k, f_int, config, report, config.budget("broyden"))
    return MeshFunction(grid, u), report


def newton_solve(problem: Problem, grid: Grid, config: IterationConfig | None = None,
                 u0: MeshFunction | None = None):
    config = config or IterationConfig()
    _check_problem(problem, grid)
    k = problem.k
    f_int = problem.f_interior(grid)
    u = _start(problem, grid, config, u0)
    report = SolveReport("newton")
    report.extra["min_coefficient_eigenvalue"] = []

    def step(v):
        H = hessian_field(v, grid)
        A = s_k_gradient(H, k)
        report.extra["min_coefficient_eigenvalue"].append(float(eigenvalues_sym(A)[..., 0].min()))
        op = assemble_nondivergence_form(grid, A)
        try:
            delta = linear_solve(op, f_int - s_k(H, k), None, config.linear)
        except (SolverBreakdown, RuntimeError) as exc:
            raise IterationError(f"Newton linearization not solvable: {exc}") from exc
        return v + delta.values

    u = _outer_loop(step, u, grid, k, f_int, config, report, config.budget("newton"))
    return MeshFunction(grid, u), report


# --- Gauss-Seidel variants for k = 2 -----------------------------------------

def _gs_solve(problem, grid, config, u0, frozen: bool, method: str):
    config = config or IterationConfig()
    _check_problem(problem, grid)
    if problem.k != 2:
        raise ConfigError(f"{method} requires k=2, got k={problem.k}")
    f_int = problem.f_interior(grid)
    if np.any(f_int < 0):
        raise KHessianError("negative right-hand side")
    f_nodes = np.zeros(grid.shape)
    f_nodes[grid.interior] = f_int
    f_flat = f_nodes.ravel(order="F")
    inv_c = _inv_c(2, grid.n, config.c_override)
    u = _start(problem, grid, config, u0).ravel(order="F").copy()
    rad = np.zeros_like(u)
    report = SolveReport(method)
    for _ in range(config.budget(method)):
        if frozen:
            _kernels.radicand2_field(u, f_flat, grid.m, grid.n, grid.h, inv_c, rad)
        diff, bad = _kernels.gs2_sweep(u, f_flat, rad, grid.m, grid.n, grid.h, inv_c,
                                       config.clamp, frozen)
        if bad >= 0:
            raise IterationError(f"radicand negative at node {grid.multi_index(bad)}")
        vals = u.reshape(grid.shape, order="F")
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > config.divergence_bound:
            report.record(diff, float("inf"), float("nan"))
            report.termination = DIVERGED
            break
        res = float(np.max(np.abs(residual_field(vals, grid, 2, f_int))))
        report.record(diff, res, float(np.min(laplacian_field(vals, grid))))
        if diff <= config.tol:
            report.termination = CONVERGED
            break
    else:
        report.termination = EXHAUSTED
    return MeshFunction(grid, u.reshape(grid.shape, order="F").copy()), report


def nonlinear_gs_solve(problem: Problem, grid: Grid, config: IterationConfig | None = None,
                       u0: MeshFunction | None = None):
    """Pointwise k=2 update with the radicand from the most recent values."""
    return _gs_solve(problem, grid, config, u0, frozen=False, method="gauss-seidel")


def partial_gs_solve(problem: Problem, grid: Grid, config: IterationConfig | None = None,
                     u0: MeshFunction | None = None):
    """Pointwise k=2 update with the radicand frozen at the previous sweep."""
    return _gs_solve(problem, grid, config, u0, frozen=True, method="partial-gs")


def radicand2(u: MeshFunction, f_int: np.ndarray, c_override=None) -> np.ndarray:
    """Radicand of the k=2 update at every interior node."""
    grid = u.grid
    lap = laplacian_field(u)
    return lap * lap + _inv_c(2, grid.n, c_override) * (f_int - s_k(hessian_field(u), 2))


# --- degenerate Monge-Ampere via a sequence of 2-Hessian problems ------------

def degenerate_ma_solve(problem: Problem, grid: Grid, config: IterationConfig | None = None,
                        u0: MeshFunction | None = None, inner_max_iter: int | None = None):
    config = config or IterationConfig()
    _check_problem(problem, grid)
    if (problem.n, problem.k) != (3, 3):
        raise ConfigError("degenerate-ma requires n=3, k=3")
    f_int = problem.f_interior(grid)
    if np.any(f_int < 0):
        raise KHessianError("negative right-hand side")
    g = problem.boundary(grid)
    u = _start(problem, grid, config, u0)
    report = SolveReport("degenerate-ma")
    report.extra["inner_iterations"] = []
    inner_budget = inner_max_iter or DEFAULT_MAX_ITER["fixed-point"]

    def step(v):
        H = hessian_field(v, grid)
        s2 = s_k(H, 2)
        det = s_k(H, 3)
        flat = s2 <= 0
        s2 = np.where(flat, 0.0, s2)
        det = np.where(flat, 0.0, det)
        rad = (s2 / 3.0) ** 1.5 + f_int - det
        if np.any(rad < 0):
            if not config.clamp:
                raise IterationError(f"radicand negative in outer update: {rad.min():.3e}")
            rad = np.maximum(rad, 0.0)
        rhs2 = 3.0 * rad ** (2.0 / 3.0)
        inner = SolveReport("fixed-point")
        try:
            out = _fixed_point_arrays(grid, 2, rhs2, g, v, config, inner, inner_budget)
        except (KHessianError, LinearSolveError) as exc:
            raise IterationError(f"outer step {report.iterations + 1}: inner solve failed: {exc}") from exc
        report.extra["inner_iterations"].append(inner.iterations)
        if inner.termination != CONVERGED:
            raise IterationError(f"outer step {report.iterations + 1}: inner solve {inner.termination} "
                                 f"after {inner.iterations} iterations")
        return out

    u = _outer_loop(step, u, grid, 3, f_int, config, report, config.budget("degenerate-ma"))
    return MeshFunction(grid, u), report


SOLVERS = {
    "fixed-point": fixed_point_solve,
    "broyden": lambda p, g, c=None, u0=None: linearized_cofactor_solve(p, g, u0, c),
    "newton": newton_solve,
    "gauss-seidel": nonlinear_gs_solve,
    "partial-gs": partial_gs_solve,
    "degenerate-ma": degenerate_ma_solve,
}


def check_method(method: str, problem: Problem):
    if method not in SOLVERS:
        raise ConfigError(f"unknown method {method!r}; expected one of {tuple(SOLVERS)}")
    if method in ("gauss-seidel", "partial-gs") and problem.k != 2:
        raise ConfigError(f"{method} requires k=2")
    if method == "degenerate-ma" and (problem.n, problem.k) != (3, 3):
        raise ConfigError("degenerate-ma requires n=3, k=3")


def solve(problem: Problem, grid: Grid, method: str = "fixed-point",
          config: IterationConfig | None = None):
    check_method(method, problem)
    return SOLVERS[method](problem, grid, config or IterationConfig())
