"""Catalog of test problems on the unit cube."""
from __future__ import annotations

import re
from dataclasses import dataclass
from math import comb
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, KHessianError
from .grid import Grid, MeshFunction, restrict

Field = Callable[..., np.ndarray]


@dataclass(frozen=True)
class Problem:
    """``S_k(D^2 u) = f`` in the cube, ``u = g`` on its boundary."""

    label: str
    n: int
    k: int
    f: Field
    g: Field
    exact: Optional[Field] = None

    def f_interior(self, grid: Grid) -> np.ndarray:
        """Right-hand side sampled at interior nodes only."""
        coords = grid.interior_coordinates()
        vals = np.broadcast_to(np.asarray(self.f(*coords), dtype=float), grid.interior_shape)
        if not np.all(np.isfinite(vals)):
            raise KHessianError("non-finite sample")
        return vals.copy()

    def boundary(self, grid: Grid) -> MeshFunction:
        """``g`` on the boundary lattice; interior entries are zero."""
        u = restrict(self.g, grid)
        u.values[grid.interior] = 0.0
        return u


def _r2(*x):
    return sum(xi * xi for xi in x)


def _test1():
    u = lambda *x: np.exp(_r2(*x))
    # D^2 u = e^{r^2} (2I + 4 x x^T): eigenvalues 2(1 + 2r^2) e^{r^2} and 2 e^{r^2} twice
    f = lambda *x: 4.0 * (3.0 + 4.0 * _r2(*x)) * np.exp(2.0 * _r2(*x))
    return Problem("test1", 3, 2, f, u, u)


TEST2_A = 2.0


def test2_laplacian(*x):
    r2, a = _r2(*x), TEST2_A
    return (6.0 * a + 2.0 * r2) / (a + r2) ** 2


def test2_det(*x):
    r2, a = _r2(*x), TEST2_A
    return 8.0 * (a - r2) / (a + r2) ** 4


def _test2():
    a = TEST2_A
    u = lambda *x: np.log(a + _r2(*x))
    f = lambda *x: 4.0 * (3.0 * a - _r2(*x)) / (a + _r2(*x)) ** 3
    return Problem("test2", 3, 2, f, u, u)


def _test3():
    u = lambda *x: -np.sqrt(3.0 - _r2(*x))
    f = lambda *x: -(_r2(*x) - 9.0) / (_r2(*x) - 3.0) ** 2
    return Problem("test3", 3, 2, f, u, u)


def _test4():
    return Problem("test4", 3, 2, lambda *x: np.ones_like(x[0]), lambda *x: np.zeros_like(x[0]))


def _test5():
    return Problem("test5", 3, 3, lambda *x: np.zeros_like(x[0]), lambda *x: np.abs(x[0] - 0.5))


def quadratic(k: int, n: int) -> Problem:
    """``u = |x|^2`` so that ``S_k(D^2 u) = binom(n, k) 2^k`` exactly on the grid."""
    if not (1 <= k <= n) or n not in (2, 3):
        raise ConfigError(f"invalid quadratic problem k={k}, n={n}")
    val = float(comb(n, k) * 2 ** k)
    u = lambda *x: _r2(*x)
    return Problem(f"quadratic-{k}-{n}", n, k, lambda *x: np.full_like(x[0], val), u, u)


_CATALOG = {"test1": _test1, "test2": _test2, "test3": _test3, "test4": _test4, "test5": _test5}
_QUAD = re.compile(r"^quadratic[-(:\s]*(\d)[-,:\s]+(\d)\)?$")

LABELS = tuple(_CATALOG) + ("quadratic-<k>-<n>",)


def make_problem(label: str) -> Problem:
    key = label.strip().lower()
    if key in _CATALOG:
        return _CATALOG[key]()
    match = _QUAD.match(key)
    if match:
        return quadratic(int(match.group(1)), int(match.group(2)))
    raise ConfigError(f"unknown problem label {label!r}; known: {', '.join(LABELS)}")


def max_error(u: MeshFunction, problem: Problem) -> float:
    if problem.exact is None:
        raise KHessianError(f"no exact solution for {problem.label}")
    ref = restrict(problem.exact, u.grid)
    return float(np.max(np.abs(u.values - ref.values)))
