"""Periodic structured grids, second-order stencils and quadrature.

Fields are plain numpy arrays indexed ``[i, j(, k)]`` with axis 0 along x.
A scalar field has shape ``grid.n``; spinor fields append a trailing axis of
4 components and vector fields a trailing axis of ``grid.dim`` components.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_NODES = 8


@dataclass(frozen=True)
class Grid:
    """Flat periodic box with ``n[a]`` nodes of spacing ``length[a] / n[a]`` per axis."""

    n: tuple[int, ...]
    length: tuple[float, ...]

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        length = tuple(float(v) for v in self.length)
        if len(n) not in (2, 3):
            raise ValueError(f"grid dimension must be 2 or 3, got {len(n)}")
        if len(length) != len(n):
            raise ValueError("n and length must have the same number of axes")
        if min(n) < MIN_NODES:
            raise ValueError(f"need at least {MIN_NODES} nodes per axis, got {n}")
        if min(length) <= 0:
            raise ValueError(f"axis lengths must be positive, got {length}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)

    @classmethod
    def cube(cls, dim: int, n: int, length: float) -> "Grid":
        return cls((n,) * dim, (length,) * dim)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.length, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod(self.length))

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    def axis_coords(self, axis: int, centered: bool = False) -> np.ndarray:
        x = np.arange(self.n[axis]) * self.h[axis]
        return x - self.length[axis] / 2 if centered else x

    def coords(self, centered: bool = False) -> tuple[np.ndarray, ...]:
        """Node coordinates, ``x_i = i h`` (or shifted so the box center sits at 0)."""
        axes = [self.axis_coords(a, centered) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def check(self, f: np.ndarray) -> None:
        if tuple(f.shape[: self.dim]) != self.n:
            raise ValueError(f"field shape {f.shape} does not match grid {self.n}")


def diff_central(f: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Periodic central difference ``(f(x+h) - f(x-h)) / 2h`` along ``axis``."""
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} invalid for a {grid.dim}D grid")
    return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * grid.h[axis])


def laplacian_flat(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Nonnegative compact Laplacian ``-sum_a (f(x+h) - 2f + f(x-h)) / h^2``."""
    out = np.zeros_like(f, dtype=float)
    for a in range(grid.dim):
        out -= (np.roll(f, -1, a) - 2 * f + np.roll(f, 1, a)) / grid.h[a] ** 2
    return out


def laplacian_wide(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Nonnegative wide-stencil Laplacian, ``-sum_a`` of ``diff_central`` applied twice."""
    out = np.zeros_like(f, dtype=float)
    for a in range(grid.dim):
        out -= diff_central(diff_central(f, grid, a), grid, a)
    return out


def gradient_flat(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Central-difference gradient of a smooth periodic scalar field."""
    return np.stack([diff_central(f, grid, a) for a in range(grid.dim)], axis=-1)


def pairwise_sum(a: np.ndarray) -> float:
    """Sum with a fixed pairwise tree, independent of memory layout and threads."""
    v = np.ascontiguousarray(a, dtype=float).ravel()
    if v.size == 0:
        return 0.0
    while v.size > 1:
        if v.size % 2:
            v = np.append(v, 0.0)
        v = v[0::2] + v[1::2]
    return float(v[0])


def integrate(f: np.ndarray, grid: Grid) -> float:
    """Rectangle rule over the periodic box."""
    grid.check(f)
    return pairwise_sum(f) * grid.cell_volume


def pointwise_sq(f: np.ndarray, grid: Grid) -> np.ndarray:
    """``|f|^2`` per node, summing any trailing component axes."""
    sq = np.asarray(f, dtype=float) ** 2
    while sq.ndim > grid.dim:
        sq = sq.sum(axis=-1)
    return sq


def norms(f: np.ndarray, grid: Grid, weight: np.ndarray | None = None) -> tuple[float, float]:
    """Return ``(sqrt(int weight |f|^2 dV), max |f|)``; the max norm ignores the weight."""
    sq = pointwise_sq(f, grid)
    if weight is not None:
        weight = np.asarray(weight, dtype=float)
        if np.any(weight < 0):
            raise ValueError("norm weight must be nonnegative")
        l2sq = integrate(weight * sq, grid)
    else:
        l2sq = integrate(sq, grid)
    return float(np.sqrt(l2sq)), float(np.sqrt(sq.max()))
