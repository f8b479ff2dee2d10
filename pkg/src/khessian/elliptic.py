"""Assembly and solution of the linear elliptic problems used by the outer iterations.

Every operator acts on interior nodes and reads boundary values as data.
Its matrix has one row per interior node (node order) and one column per
grid node, so a Dirichlet solve moves the boundary columns to the right
hand side.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import ConfigError, GridError, LinearSolveError, SolverBreakdown
from .grid import Grid, MeshFunction

METHODS = ("direct", "krylov", "sweep")


@dataclass(frozen=True)
class LinearSolveParams:
    """Linear solver settings.

    ``tol`` bounds the max-norm residual of the interior equations relative
    to ``max(1, |rhs|, |A| |u|)``, the size of the terms that cancel in it.
    """

    tol: float = 1e-12
    max_iter: int = 20000
    method: str = "direct"

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError("linear tolerance must be positive")
        if self.max_iter < 1:
            raise ConfigError("linear max_iter must be at least 1")
        if self.method not in METHODS:
            raise ConfigError(f"unknown linear method {self.method!r}; expected one of {METHODS}")


@dataclass(eq=False)
class LinearOperator:
    grid: Grid
    matrix: sp.csr_matrix
    symmetric: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def interior_nodes(self) -> np.ndarray:
        return _interior_nodes(self.grid)

    @property
    def boundary_nodes(self) -> np.ndarray:
        return _boundary_nodes(self.grid)

    @property
    def A_II(self) -> sp.csr_matrix:
        if "A_II" not in self._cache:
            self._cache["A_II"] = self.matrix[:, self.interior_nodes].tocsr()
        return self._cache["A_II"]

    @property
    def A_IB(self) -> sp.csr_matrix:
        if "A_IB" not in self._cache:
            self._cache["A_IB"] = self.matrix[:, self.boundary_nodes].tocsr()
        return self._cache["A_IB"]

    @property
    def norm(self) -> float:
        if "norm" not in self._cache:
            self._cache["norm"] = float(abs(self.matrix).sum(axis=1).max())
        return self._cache["norm"]

    def apply(self, u: MeshFunction | np.ndarray) -> np.ndarray:
        """Operator values at interior nodes, shape ``grid.interior_shape``."""
        flat = u.flat if isinstance(u, MeshFunction) else np.asarray(u).ravel(order="F")
        return (self.matrix @ flat).reshape(self.grid.interior_shape, order="F")

    def stencil(self, node) -> list[tuple[tuple[int, ...], float]]:
        """``(neighbor multi-index, coefficient)`` pairs for one interior node."""
        g = self.grid
        if not g.is_interior(node):
            raise GridError(f"stencil leaves grid at node {tuple(node)}")
        row = int(np.searchsorted(self.interior_nodes, g.node_index(node)))
        lo, hi = self.matrix.indptr[row], self.matrix.indptr[row + 1]
        return [(g.multi_index(c), float(v))
                for c, v in zip(self.matrix.indices[lo:hi], self.matrix.data[lo:hi])]

    def lu(self):
        if "lu" not in self._cache:
            self._cache["lu"] = spla.splu(self.A_II.tocsc())
        return self._cache["lu"]


@lru_cache(maxsize=16)
def _interior_nodes(grid: Grid) -> np.ndarray:
    return np.flatnonzero(~grid.boundary_mask().ravel(order="F"))


@lru_cache(maxsize=16)
def _boundary_nodes(grid: Grid) -> np.ndarray:
    return np.flatnonzero(grid.boundary_mask().ravel(order="F"))


def _assemble(grid: Grid, terms) -> sp.csr_matrix:
    """Build the operator matrix from ``(offset, coefficient field)`` terms."""
    ni, nn = grid.num_interior, grid.num_nodes
    rows_ids = np.arange(ni).reshape(grid.interior_shape, order="F")
    node_ids = np.arange(nn).reshape(grid.shape, order="F")
    rows, cols, vals = [], [], []
    for offset, coef in terms:
        coef = np.broadcast_to(coef, grid.interior_shape)
        rows.append(rows_ids.ravel(order="F"))
        cols.append(grid.shifted(node_ids, np.asarray(offset)).ravel(order="F"))
        vals.append(coef.ravel(order="F"))
    M = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(ni, nn)).tocsr()
    M.sum_duplicates()
    M.eliminate_zeros()
    return M


def _is_symmetric(M: sp.csr_matrix) -> bool:
    if M.nnz == 0:
        return True
    diff = abs(M - M.T)
    return diff.nnz == 0 or diff.max() <= 1e-13 * abs(M).max()


def _wrap(grid: Grid, M: sp.csr_matrix) -> LinearOperator:
    op = LinearOperator(grid, M)
    op.symmetric = _is_symmetric(op.A_II)
    return op


@lru_cache(maxsize=8)
def assemble_laplacian(grid: Grid) -> LinearOperator:
    h2 = grid.h * grid.h
    zero = np.zeros(grid.n, dtype=int)
    terms = [(zero, -2.0 * grid.n / h2)]
    for i in range(grid.n):
        terms += [(grid.unit(i), 1.0 / h2), (-grid.unit(i), 1.0 / h2)]
    op = LinearOperator(grid, _assemble(grid, terms), symmetric=True)
    return op


def _coefficient_field(grid: Grid, A, shape) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape == (grid.n, grid.n):
        A = np.broadcast_to(A, shape + (grid.n, grid.n))
    if A.shape != shape + (grid.n, grid.n):
        raise GridError("coefficient field incomplete: "
                        f"expected shape {shape + (grid.n, grid.n)}, got {A.shape}")
    return A


def assemble_nondivergence_form(grid: Grid, A) -> LinearOperator:
    """Operator ``v -> A(x) : H_d v(x)`` for a matrix field on interior nodes."""
    A = _coefficient_field(grid, A, grid.interior_shape)
    if not np.all(np.isfinite(A)):
        raise GridError("coefficient field incomplete: non-finite entries")
    n, h2 = grid.n, grid.h * grid.h
    zero = np.zeros(n, dtype=int)
    terms = []
    for i in range(n):
        ei = grid.unit(i)
        a = A[..., i, i] / h2
        terms += [(ei, a), (-ei, a), (zero, -2.0 * a)]
        for j in range(n):
            if j == i:
                continue
            ej = grid.unit(j)
            b = A[..., i, j] / (4.0 * h2)
            terms += [(ei + ej, b), (-ei - ej, b), (ei - ej, -b), (-ei + ej, -b)]
    return _wrap(grid, _assemble(grid, terms))


def assemble_divergence_form(grid: Grid, A) -> LinearOperator:
    """Operator ``v -> sum_i d+_i ( sum_j A_ij d-_j v )``.

    ``A`` is a matrix field on all nodes, shape ``grid.shape + (n, n)``, or a
    constant matrix. It is read at each interior node and at its forward
    neighbours ``x + h e_i``, which may lie on the boundary.
    """
    A = _coefficient_field(grid, A, grid.shape)
    n, h2 = grid.n, grid.h * grid.h
    zero = np.zeros(n, dtype=int)
    at_center = A[grid.interior]
    if not np.all(np.isfinite(at_center)):
        raise GridError("coefficient field incomplete: non-finite entries at interior nodes")
    terms = []
    for i in range(n):
        ei = grid.unit(i)
        fwd = A[tuple(slice(1 + o, grid.m + o) for o in ei)]
        if not np.all(np.isfinite(fwd[..., i, :])):
            raise GridError("coefficient field incomplete: non-finite entries at forward neighbours")
        for j in range(n):
            ej = grid.unit(j)
            a = fwd[..., i, j] / h2
            b = at_center[..., i, j] / h2
            terms += [(ei, a), (ei - ej, -a), (zero, -b), (-ej, b)]
    return _wrap(grid, _assemble(grid, terms))


def extend_to_nodes(grid: Grid, field_int: np.ndarray) -> np.ndarray:
    """Extend an interior field to all nodes by linear extrapolation along each axis.

    For a discrete Hessian this matches second-order one-sided differences
    on the boundary faces. Needs ``m >= 3``; with a single interior layer
    the value is copied.
    """
    pad = [(1, 1)] * grid.n + [(0, 0)] * (field_int.ndim - grid.n)
    out = np.pad(field_int, pad, mode="edge")
    if grid.m < 3:
        return out
    m = grid.m
    for ax in range(grid.n):
        def at(i):
            idx = [slice(None)] * out.ndim
            idx[ax] = i
            return tuple(idx)
        out[at(0)] = 2.0 * out[at(1)] - out[at(2)]
        out[at(m)] = 2.0 * out[at(m - 1)] - out[at(m - 2)]
    return out


# --- solves -----------------------------------------------------------------

def _as_interior(grid: Grid, rhs) -> np.ndarray:
    if isinstance(rhs, MeshFunction):
        rhs = rhs.interior_values()
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape == grid.shape:
        rhs = rhs[grid.interior]
    return np.broadcast_to(rhs, grid.interior_shape)


def _as_nodes(grid: Grid, g) -> np.ndarray:
    if g is None:
        return np.zeros(grid.shape)
    if isinstance(g, MeshFunction):
        return g.values
    return np.broadcast_to(np.asarray(g, dtype=float), grid.shape)


def residual_scale(op: LinearOperator, rhs: np.ndarray, u: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(rhs))), op.norm * float(np.max(np.abs(u))))


def linear_solve(op: LinearOperator, rhs, g=None, params: LinearSolveParams | None = None
                 ) -> MeshFunction:
    """Solve ``op(u) = rhs`` on interior nodes with ``u = g`` on the boundary."""
    params = params or LinearSolveParams()
    grid = op.grid
    rhs = _as_interior(grid, rhs)
    if not (np.all(np.isfinite(rhs))):
        raise LinearSolveError("non-finite right-hand side")
    gvals = _as_nodes(grid, g)
    bflat = gvals.ravel(order="F")[op.boundary_nodes]
    if not np.all(np.isfinite(bflat)):
        raise LinearSolveError("non-finite boundary data")
    b = rhs.ravel(order="F") - op.A_IB @ bflat

    if params.method == "direct":
        x, its = op.lu().solve(b), 1
    elif params.method == "krylov":
        x, its = _krylov(op, b, params)
    else:
        x, its = _sweep(op, b, params)

    out = np.empty(grid.num_nodes)
    out[op.boundary_nodes] = bflat
    out[op.interior_nodes] = x
    u = MeshFunction(grid, out)
    res = float(np.max(np.abs(op.apply(u) - rhs)))
    if not np.isfinite(res) or res > params.tol * residual_scale(op, rhs, out):
        raise LinearSolveError("linear solve did not converge", res, its)
    return u


def solve_poisson(grid: Grid, rhs, g=None, params: LinearSolveParams | None = None
                  ) -> MeshFunction:
    return linear_solve(assemble_laplacian(grid), rhs, g, params)


def _definite_form(op: LinearOperator):
    """``(sign, matrix)`` with the sign chosen so the diagonal is positive."""
    if "signed" not in op._cache:
        A = op.A_II
        s = -1.0 if A.diagonal().mean() < 0 else 1.0
        op._cache["signed"] = (s, (s * A).tocsr())
    return op._cache["signed"]


def _krylov(op: LinearOperator, b: np.ndarray, params: LinearSolveParams):
    s, A = _definite_form(op)
    b = s * b
    d = A.diagonal()
    if np.any(d == 0):
        raise SolverBreakdown("solver breakdown: zero diagonal in Jacobi preconditioner")
    if op.symmetric and np.all(d > 0):
        return _pcg(A, b, 1.0 / d, params, op.norm)
    return _pbicgstab(A, b, 1.0 / d, params, op.norm)


def _converged(r, x, b, params, norm):
    scale = max(1.0, float(np.max(np.abs(b))), norm * float(np.max(np.abs(x))))
    return float(np.max(np.abs(r))) <= 0.1 * params.tol * scale


def _pcg(A, b, dinv, params, norm):
    x = np.zeros_like(b)
    r = b.copy()
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, params.max_iter + 1):
        if _converged(r, x, b, params, norm):
            r = b - A @ x
            if _converged(r, x, b, params, norm):
                return x, it - 1
            z = dinv * r
            p = z.copy()
            rz = r @ z
        Ap = A @ p
        pAp = p @ Ap
        if not pAp > 0:
            raise SolverBreakdown("solver breakdown: operator is not definite")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, params.max_iter


def _pbicgstab(A, b, dinv, params, norm):
    x = np.zeros_like(b)
    r = b.copy()
    rhat = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    for it in range(1, params.max_iter + 1):
        if _converged(r, x, b, params, norm):
            r = b - A @ x
            if _converged(r, x, b, params, norm):
                return x, it - 1
            rhat = r.copy()
            rho = alpha = omega = 1.0
            v[:] = 0.0
            p[:] = 0.0
        rho_new = rhat @ r
        if rho_new == 0.0 or omega == 0.0:
            raise SolverBreakdown("solver breakdown: BiCGSTAB recurrence collapsed")
        beta = (rho_new / rho) * (alpha / omega)
        rho = rho_new
        p = r + beta * (p - omega * v)
        y = dinv * p
        v = A @ y
        denom = rhat @ v
        if denom == 0.0:
            raise SolverBreakdown("solver breakdown: BiCGSTAB recurrence collapsed")
        alpha = rho / denom
        s = r - alpha * v
        zs = dinv * s
        t = A @ zs
        tt = t @ t
        omega = (t @ s) / tt if tt > 0 else 0.0
        x += alpha * y + omega * zs
        r = s - omega * t
    return x, params.max_iter


def _sweep(op: LinearOperator, b: np.ndarray, params: LinearSolveParams):
    A = op.A_II
    if np.any(A.diagonal() == 0):
        raise SolverBreakdown("solver breakdown: zero diagonal in Gauss-Seidel sweep")
    x = np.zeros_like(b)
    for it in range(1, params.max_iter + 1):
        _kernels.gauss_seidel_csr(A.indptr, A.indices, A.data, b, x)
        r = b - A @ x
        if _converged(r, x, b, params, op.norm):
            return x, it
    return x, params.max_iter
