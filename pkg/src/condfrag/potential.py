"""Double-well traps and the discretized kinetic operator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grid import Grid, GridMismatchError

__all__ = [
    "PotentialSpec",
    "Potential",
    "build_potential",
    "kinetic_matrix",
    "kinetic_banded",
    "well_center",
]

GAUSSIAN_BARRIER = "gaussian_barrier"
HARD_WALL = "hard_wall"

# Central second-derivative stencils, offsets -p..p.
_STENCILS = {
    2: np.array([1.0, -2.0, 1.0]),
    4: np.array([-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0]),
}


@dataclass(frozen=True)
class PotentialSpec:
    """Harmonic trap ``x**2/2`` with an optional central barrier.

    ``kind="gaussian_barrier"`` adds ``b * exp(-x**2 / (2 sigma**2))``.
    ``kind="hard_wall"`` is the infinitely strong barrier: every orbital is
    forced to vanish at ``x = 0`` and ``barrier_height``/``barrier_width`` are
    ignored.
    """

    kind: str = GAUSSIAN_BARRIER
    barrier_height: float = 0.0
    barrier_width: float = 0.5

    def __post_init__(self):
        if self.kind not in (GAUSSIAN_BARRIER, HARD_WALL):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == GAUSSIAN_BARRIER:
            if not self.barrier_width > 0:
                raise ValueError("barrier_width must be > 0")
            if not self.barrier_height >= 0:
                raise ValueError("barrier_height must be >= 0")
            if math.isinf(self.barrier_height):
                raise ValueError("use kind='hard_wall' for an infinite barrier")

    @classmethod
    def for_barrier(cls, b: float, sigma: float = 0.5) -> "PotentialSpec":
        """Gaussian barrier of height ``b``; ``b = inf`` selects the hard wall."""
        if math.isinf(b) and b > 0:
            return cls(HARD_WALL, math.inf, sigma)
        return cls(GAUSSIAN_BARRIER, float(b), sigma)

    @property
    def hard_wall(self) -> bool:
        return self.kind == HARD_WALL


@dataclass(frozen=True, eq=False)
class Potential:
    """Tabulated trap potential plus the node flag consumed by the solvers."""

    grid: Grid
    values: np.ndarray
    hard_wall: bool = False
    spec: PotentialSpec | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise GridMismatchError("potential does not match grid")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def shifted(self, c: float) -> "Potential":
        return Potential(self.grid, self.values + c, self.hard_wall, self.spec)


def build_potential(spec: PotentialSpec, grid: Grid) -> Potential:
    x = grid.x
    values = 0.5 * x**2
    if spec.kind == GAUSSIAN_BARRIER and spec.barrier_height > 0:
        values = values + spec.barrier_height * np.exp(-(x**2) / (2.0 * spec.barrier_width**2))
    return Potential(grid, values, spec.hard_wall, spec)


def well_center(spec: PotentialSpec) -> float:
    """Positive location of the right-hand potential minimum (0 if single-welled)."""
    if spec.hard_wall:
        return 0.0
    b, s = spec.barrier_height, spec.barrier_width
    if b <= s**2:
        return 0.0
    return s * math.sqrt(2.0 * math.log(b / s**2))


def _stencil_entries(grid: Grid, hard_wall: bool):
    """Rows, columns and weights of the matrix of ``-1/2 d^2/dx^2``.

    Values outside the domain are zero. With a hard wall each half-line is
    closed at x = 0 by odd reflection: a stencil leg crossing the origin picks
    up minus the value at the mirror point, which is the Dirichlet condition
    at the wall to the stencil's full order for either grid parity.
    """
    n = grid.n_points
    coeffs = -0.5 * _STENCILS[grid.fd_order] / grid.dx**2
    p = len(coeffs) // 2
    x = grid.x
    side = np.sign(x)
    rows, cols, vals = [], [], []
    for k in range(-p, p + 1):
        c = coeffs[k + p]
        i = np.arange(max(0, -k), min(n, n - k))
        j = i + k
        w = np.full(i.shape, c)
        if hard_wall:
            crossing = side[j] != side[i]
            j = np.where(crossing, n - 1 - j, j)
            w = np.where(crossing, -c, c)
            # The x = 0 node (odd point count) is a pinned zero, not an unknown.
            keep = (side[i] != 0) & (side[j] != 0)
            i, j, w = i[keep], j[keep], w[keep]
        rows.append(i)
        cols.append(j)
        vals.append(w)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), p


@lru_cache(maxsize=32)
def kinetic_matrix(grid: Grid, hard_wall: bool = False) -> sp.csr_matrix:
    """Sparse symmetric matrix of ``-1/2 d^2/dx^2`` on ``grid``."""
    r, c, v, _ = _stencil_entries(grid, hard_wall)
    n = grid.n_points
    return sp.csr_matrix((v, (r, c)), shape=(n, n))


@lru_cache(maxsize=32)
def kinetic_banded(grid: Grid, hard_wall: bool = False):
    """Kinetic matrix in ``scipy.linalg.solve_banded`` storage and its half-bandwidth."""
    r, c, v, p = _stencil_entries(grid, hard_wall)
    ab = np.zeros((2 * p + 1, grid.n_points))
    # Mirrored legs near the wall land within the band of the original stencil.
    if np.any(np.abs(r - c) > p):
        raise AssertionError("stencil left the band")
    np.add.at(ab, (p + r - c, c), v)
    ab.flags.writeable = False
    return ab, p
