"""Hartree-Fock energies of single and dual condensates.

For a single condensate of ``N`` bosons in ``phi0``::

    E_s = N eps(phi0) + g N (N - 1) / 2 * int phi0**4

and for the dual condensate ``|N1, phi1; N2, phi2>``::

    E_d = N1 eps(phi1) + N2 eps(phi2)
          + g N1 (N1 - 1) / 2 * int phi1**4 + g N2 (N2 - 1) / 2 * int phi2**4
          + 2 g N1 N2 int phi1**2 phi2**2

where ``eps`` is the single-particle energy. The breakdown separates the
pieces quadratic in the occupations from the linear self-interaction
corrections so that the Nozieres-type comparison can be read off directly.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .grid import GridMismatchError, RealWavefunction
from .potential import Potential, kinetic_matrix

__all__ = [
    "CondensateConfig",
    "EnergyBreakdown",
    "OrthogonalityError",
    "single_particle_energy",
    "apply_single_particle",
    "quartic_integral",
    "density_overlap",
    "orthonormality_check",
    "energy_single",
    "energy_dual",
]

ORTHOGONALITY_TOL = 1e-6


class OrthogonalityError(ValueError):
    pass


@dataclass(frozen=True)
class CondensateConfig:
    """Particle numbers, coupling and solver controls.

    ``N1``/``N2`` default to an even split (``N1`` takes the odd particle).
    ``tol_residual`` bounds the norm of the projected gradient of the energy
    per particle.
    """

    N: int
    g: float = 0.0
    N1: int | None = None
    N2: int | None = None
    tol_energy: float = 1e-10
    tol_residual: float = 1e-8
    max_iters: int = 200_000
    dt_imag: float = 1e-3

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not self.g >= 0:
            raise ValueError("g must be >= 0 (repulsive contact interaction)")
        n1, n2 = self.N1, self.N2
        if n1 is None and n2 is None:
            n2 = self.N // 2
            n1 = self.N - n2
        elif n1 is None:
            n1 = self.N - n2
        elif n2 is None:
            n2 = self.N - n1
        if n1 < 0 or n2 < 0 or n1 + n2 != self.N:
            raise ValueError(f"occupations must satisfy N1 + N2 = N with N1, N2 >= 0 (got {n1}, {n2})")
        object.__setattr__(self, "N1", int(n1))
        object.__setattr__(self, "N2", int(n2))
        if not (self.tol_energy > 0 and self.tol_residual > 0 and self.dt_imag > 0):
            raise ValueError("tolerances and dt_imag must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def replace(self, **changes) -> "CondensateConfig":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        if "N" in changes and "N1" not in changes and "N2" not in changes:
            kw["N1"] = kw["N2"] = None
        kw.update(changes)
        return CondensateConfig(**kw)


@dataclass(frozen=True)
class EnergyBreakdown:
    single_particle: float
    hartree_quad: float
    exchange: float
    self_correction: float
    total: float

    @property
    def interaction(self) -> float:
        return self.hartree_quad + self.exchange + self.self_correction

    def component_sum(self) -> float:
        return self.single_particle + self.hartree_quad + self.exchange + self.self_correction

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _check_grid(phi: RealWavefunction, U: Potential):
    if phi.grid != U.grid:
        raise GridMismatchError("wavefunction and potential are on different grids")


def apply_single_particle(values: np.ndarray, U: Potential) -> np.ndarray:
    """``[-1/2 d^2/dx^2 + U] f`` on the grid of ``U``."""
    return kinetic_matrix(U.grid, U.hard_wall) @ values + U.values * values


def single_particle_energy(phi: RealWavefunction, U: Potential) -> float:
    _check_grid(phi, U)
    v = phi.values
    return phi.grid.integrate(v * apply_single_particle(v, U))


def quartic_integral(phi: RealWavefunction) -> float:
    return phi.grid.integrate(phi.values**4)


def density_overlap(phi1: RealWavefunction, phi2: RealWavefunction) -> float:
    if phi1.grid != phi2.grid:
        raise GridMismatchError("wavefunctions live on different grids")
    return phi1.grid.integrate(phi1.values**2 * phi2.values**2)


def orthonormality_check(phi1: RealWavefunction, phi2: RealWavefunction):
    """Return ``(<phi1|phi1>, <phi2|phi2>, <phi1|phi2>)``."""
    return phi1.inner(phi1), phi2.inner(phi2), phi1.inner(phi2)


def energy_single(config: CondensateConfig, phi0: RealWavefunction, U: Potential):
    """Energy of ``|N, phi0>`` and its breakdown."""
    N, g = config.N, config.g
    eps = single_particle_energy(phi0, U)
    q = quartic_integral(phi0)
    total = N * eps + 0.5 * g * N * (N - 1) * q
    breakdown = EnergyBreakdown(
        single_particle=N * eps,
        hartree_quad=0.5 * g * N**2 * q,
        exchange=0.0,
        self_correction=-0.5 * g * N * q,
        total=total,
    )
    return total, breakdown


def energy_dual(
    config: CondensateConfig,
    phi1: RealWavefunction,
    phi2: RealWavefunction,
    U: Potential,
    check: bool = True,
):
    """Energy of ``|N1, phi1; N2, phi2>`` and its breakdown.

    With ``check`` the orbitals must be orthogonal to within 1e-6.
    """
    if check:
        overlap = phi1.inner(phi2)
        if abs(overlap) > ORTHOGONALITY_TOL:
            raise OrthogonalityError(f"orbitals are not orthogonal: <phi1|phi2> = {overlap:.3e}")
    n1, n2, g = config.N1, config.N2, config.g
    e1 = single_particle_energy(phi1, U)
    e2 = single_particle_energy(phi2, U)
    q1 = quartic_integral(phi1)
    q2 = quartic_integral(phi2)
    d12 = density_overlap(phi1, phi2)
    exchange = 2.0 * g * n1 * n2 * d12
    total = (
        n1 * e1
        + n2 * e2
        + 0.5 * g * n1 * (n1 - 1) * q1
        + 0.5 * g * n2 * (n2 - 1) * q2
        + exchange
    )
    breakdown = EnergyBreakdown(
        single_particle=n1 * e1 + n2 * e2,
        hartree_quad=0.5 * g * (n1**2 * q1 + n2**2 * q2),
        exchange=exchange,
        self_correction=-0.5 * g * (n1 * q1 + n2 * q2),
        total=total,
    )
    return total, breakdown
