"""Uniform lattice on the unit cube, grid functions and difference stencils.

Nodes are addressed by multi-indices ``(i_1, ..., i_n)`` in ``{0..m}^n``.
Values are stored as an ndarray of shape ``(m+1,)*n`` indexed in that
order; the flat node index puts axis 1 fastest, which is also the sweep
order of the Gauss-Seidel solvers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GridError


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``m`` subdivisions per axis on ``[0, 1]^n``."""

    n: int
    m: int
    h: float = field(init=False)

    def __post_init__(self):
        if self.n not in (2, 3):
            raise GridError(f"unsupported dimension: {self.n}")
        if self.m < 2:
            raise GridError(f"no interior nodes for m={self.m}")
        object.__setattr__(self, "h", 1.0 / self.m)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m + 1,) * self.n

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return (self.m - 1,) * self.n

    @property
    def num_nodes(self) -> int:
        return (self.m + 1) ** self.n

    @property
    def num_interior(self) -> int:
        return (self.m - 1) ** self.n

    @property
    def num_boundary(self) -> int:
        return self.num_nodes - self.num_interior

    @property
    def interior(self) -> tuple[slice, ...]:
        """Index expression selecting interior nodes of a value array."""
        return (slice(1, self.m),) * self.n

    def node_index(self, multi: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.shape, order="F"))

    def multi_index(self, index: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(index, self.shape, order="F"))

    def is_boundary(self, multi: Sequence[int]) -> bool:
        return any(i == 0 or i == self.m for i in multi)

    def is_interior(self, multi: Sequence[int]) -> bool:
        return all(0 < i < self.m for i in multi) and len(multi) == self.n

    def boundary_mask(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        mask[self.interior] = False
        return mask

    def coordinates(self) -> list[np.ndarray]:
        """Coordinate arrays of all nodes, one per axis, each of shape ``self.shape``."""
        axis = np.arange(self.m + 1) / self.m
        return list(np.meshgrid(*([axis] * self.n), indexing="ij"))

    def interior_coordinates(self) -> list[np.ndarray]:
        return [c[self.interior] for c in self.coordinates()]

    def shifted(self, values: np.ndarray, offset: Sequence[int]) -> np.ndarray:
        """View of ``values`` at ``x + h*offset`` for every interior node ``x``."""
        return values[tuple(slice(1 + o, self.m + o) for o in offset)]

    def unit(self, i: int, scale: int = 1) -> np.ndarray:
        e = np.zeros(self.n, dtype=int)
        e[i] = scale
        return e


def build_grid(n: int, m: int) -> Grid:
    return Grid(n, m)


@dataclass
class MeshFunction:
    """Real values on every node of a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            if self.values.size != self.grid.num_nodes:
                raise GridError(
                    f"expected {self.grid.num_nodes} values, got {self.values.size}")
            self.values = self.values.reshape(self.grid.shape, order="F")

    @classmethod
    def zeros(cls, grid: Grid) -> "MeshFunction":
        return cls(grid, np.zeros(grid.shape))

    @property
    def flat(self) -> np.ndarray:
        """Values in node order (axis 1 fastest)."""
        return self.values.ravel(order="F")

    def __getitem__(self, multi):
        return self.values[tuple(multi)]

    def copy(self) -> "MeshFunction":
        return MeshFunction(self.grid, self.values.copy())

    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.interior]


def restrict(v: Callable[..., np.ndarray], grid: Grid) -> MeshFunction:
    """Sample ``v(x_1, ..., x_n)`` at every node, boundary included.

    ``v`` is called once with coordinate arrays and must broadcast.
    """
    coords = grid.coordinates()
    vals = np.broadcast_to(np.asarray(v(*coords), dtype=float), grid.shape).copy()
    if not np.all(np.isfinite(vals)):
        raise GridError("non-finite sample")
    return MeshFunction(grid, vals)


def _check_interior(grid: Grid, x: Sequence[int]) -> tuple[int, ...]:
    x = tuple(int(i) for i in x)
    if not grid.is_interior(x):
        raise GridError(f"stencil leaves grid at node {x}")
    return x


def second_difference(u: MeshFunction, x: Sequence[int], i: int, j: int) -> float:
    """Entry ``(i, j)`` of the discrete Hessian at interior node ``x``."""
    g, v = u.grid, u.values
    x = np.array(_check_interior(g, x))
    h2 = g.h * g.h
    ei, ej = g.unit(i), g.unit(j)
    if i == j:
        return (v[tuple(x + ei)] - 2.0 * v[tuple(x)] + v[tuple(x - ei)]) / h2
    return (v[tuple(x + ei + ej)] + v[tuple(x - ei - ej)]
            - v[tuple(x + ei - ej)] - v[tuple(x - ei + ej)]) / (4.0 * h2)


def discrete_hessian(u: MeshFunction, x: Sequence[int]) -> np.ndarray:
    n = u.grid.n
    H = np.empty((n, n))
    for i in range(n):
        H[i, i] = second_difference(u, x, i, i)
        for j in range(i + 1, n):
            H[i, j] = H[j, i] = second_difference(u, x, i, j)
    return H


def discrete_laplacian(u: MeshFunction, x: Sequence[int]) -> float:
    return float(sum(second_difference(u, x, i, i) for i in range(u.grid.n)))


def hessian_field(u: MeshFunction | np.ndarray, grid: Grid | None = None) -> np.ndarray:
    """Discrete Hessian at all interior nodes, shape ``interior_shape + (n, n)``."""
    if isinstance(u, MeshFunction):
        grid, v = u.grid, u.values
    else:
        v = u
    n, h2 = grid.n, grid.h * grid.h
    H = np.empty(grid.interior_shape + (n, n))
    center = v[grid.interior]
    for i in range(n):
        ei = grid.unit(i)
        H[..., i, i] = (grid.shifted(v, ei) - 2.0 * center + grid.shifted(v, -ei)) / h2
        for j in range(i + 1, n):
            ej = grid.unit(j)
            H[..., i, j] = (grid.shifted(v, ei + ej) + grid.shifted(v, -ei - ej)
                            - grid.shifted(v, ei - ej) - grid.shifted(v, -ei + ej)) / (4.0 * h2)
            H[..., j, i] = H[..., i, j]
    return H


def laplacian_field(u: MeshFunction | np.ndarray, grid: Grid | None = None) -> np.ndarray:
    """Discrete Laplacian at all interior nodes, summed in axis order like the trace."""
    if isinstance(u, MeshFunction):
        grid, v = u.grid, u.values
    else:
        v = u
    h2 = grid.h * grid.h
    center = v[grid.interior]
    out = np.zeros(grid.interior_shape)
    for i in range(grid.n):
        ei = grid.unit(i)
        out += (grid.shifted(v, ei) - 2.0 * center + grid.shifted(v, -ei)) / h2
    return out


def max_norm(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0
