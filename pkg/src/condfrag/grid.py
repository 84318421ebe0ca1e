"""Uniform 1D grids and wavefunctions sampled on them.

All quantities are in oscillator units (hbar = m = omega = 1). Integrals are
uniform Riemann sums ``dx * sum(f)``, which coincide with the trapezoid rule
for functions that vanish at the domain ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "RealWavefunction",
    "ComplexWavefunction",
    "gaussian",
    "oscillator_ground_state",
    "GridMismatchError",
]

MIN_POINTS = 16
STENCIL_ORDERS = (2, 4)


class GridMismatchError(ValueError):
    """Raised when two objects that must share a grid do not."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid symmetric about the origin.

    Parameters
    ----------
    n_points : int
        Number of grid points, at least 16.
    x_min, x_max : float
        Domain ends. ``x_min`` must equal ``-x_max``.
    fd_order : int
        Accuracy order of the central finite-difference Laplacian (2 or 4).
    """

    n_points: int
    x_min: float
    x_max: float
    fd_order: int = 4

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < MIN_POINTS:
            raise ValueError(f"n_points must be an integer >= {MIN_POINTS}, got {self.n_points}")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be smaller than x_max")
        if self.x_min != -self.x_max:
            raise ValueError("grid must be symmetric about 0 (x_min == -x_max)")
        if self.fd_order not in STENCIL_ORDERS:
            raise ValueError(f"fd_order must be one of {STENCIL_ORDERS}")

    @classmethod
    def symmetric(cls, half_width: float, n_points: int, fd_order: int = 4) -> "Grid":
        return cls(int(n_points), -float(half_width), float(half_width), fd_order)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        # Built so that x[::-1] == -x bit for bit; mirror operations rely on it.
        half = self.x_min + self.dx * np.arange(self.n_points // 2)
        mid = [0.0] if self.n_points % 2 else []
        x = np.concatenate([half, mid, -half[::-1]])
        x.flags.writeable = False
        return x

    @property
    def has_center_point(self) -> bool:
        return self.n_points % 2 == 1

    def integrate(self, f: np.ndarray) -> float:
        return float(self.dx * np.sum(f))

    def mirror(self, f: np.ndarray) -> np.ndarray:
        """Return ``f(-x)`` sampled on this grid."""
        return np.asarray(f)[::-1]

    def enlarged(self, n_points: int) -> "Grid":
        """Symmetric grid with the same spacing and ``n_points`` points."""
        if (n_points - self.n_points) % 2:
            raise ValueError("enlarged grid must add the same number of points on each side")
        if n_points < self.n_points:
            raise ValueError("enlarged grid must not be smaller")
        half = 0.5 * (n_points - 1) * self.dx
        return Grid(n_points, -half, half, self.fd_order)


def _frozen(a):
    a = np.array(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class _Wavefunction:
    grid: Grid
    values: np.ndarray

    _dtype = float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=self._dtype)
        if values.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"values have shape {values.shape}, grid has {self.grid.n_points} points"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("wavefunction contains non-finite values")
        object.__setattr__(self, "values", _frozen(values))

    def norm_squared(self) -> float:
        return self.grid.integrate(np.abs(self.values) ** 2)

    def normalize(self):
        nrm = np.sqrt(self.norm_squared())
        if nrm == 0.0:
            raise ValueError("cannot normalize a zero wavefunction")
        return type(self)(self.grid, self.values / nrm)

    def inner(self, other):
        if other.grid != self.grid:
            raise GridMismatchError("wavefunctions live on different grids")
        return self.grid.dx * np.vdot(self.values, other.values)

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def mirrored(self):
        return type(self)(self.grid, self.grid.mirror(self.values))


class RealWavefunction(_Wavefunction):
    """Real amplitudes on a grid (ground-state orbitals)."""

    def inner(self, other) -> float:
        return float(super().inner(other))


class ComplexWavefunction(_Wavefunction):
    """Complex amplitudes on a grid, used for free expansion."""

    _dtype = complex

    def inner(self, other) -> complex:
        return complex(super().inner(other))

    @classmethod
    def from_real(cls, psi: RealWavefunction) -> "ComplexWavefunction":
        return cls(psi.grid, psi.values)


def gaussian(grid: Grid, center: float = 0.0, width: float = 1.0) -> RealWavefunction:
    """Normalized Gaussian ``exp(-(x - center)**2 / (2 width**2))``."""
    values = np.exp(-((grid.x - center) ** 2) / (2.0 * width**2))
    return RealWavefunction(grid, values).normalize()


def oscillator_ground_state(grid: Grid) -> RealWavefunction:
    """Analytic ``pi**-0.25 exp(-x**2/2)``, not renormalized on the grid."""
    return RealWavefunction(grid, np.pi**-0.25 * np.exp(-grid.x**2 / 2.0))
