"""Single versus fragmented (dual) Bose condensates in a 1D double well.

Oscillator units throughout (hbar = m = omega = 1). The main entry points:

- :mod:`condfrag.grid`, :mod:`condfrag.potential`: grids, wavefunctions, traps
- :mod:`condfrag.energy`: Hartree-Fock energies and their breakdown
- :mod:`condfrag.solver`: ground states of the single and dual functionals
- :mod:`condfrag.fragmentation`: hard-wall identities, barrier sweeps, crossover
- :mod:`condfrag.interference`: release, expansion, detection statistics
- :mod:`condfrag.config`, :mod:`condfrag.fileio`, :mod:`condfrag.cli`: plumbing
"""

__version__ = "0.1.0"

from .energy import CondensateConfig, EnergyBreakdown, energy_dual, energy_single
from .fragmentation import (
    barrier_sweep,
    decompose_comparison,
    find_crossover,
    infinite_barrier_report,
)
from .grid import ComplexWavefunction, Grid, RealWavefunction
from .interference import ensemble_stats, estimate_phase, prepare_snapshot, sample_run
from .potential import Potential, PotentialSpec, build_potential
from .solver import DualPair, SolverReport, solve_dual_ground, solve_single_ground

__all__ = [
    "__version__",
    "CondensateConfig",
    "EnergyBreakdown",
    "energy_single",
    "energy_dual",
    "Grid",
    "RealWavefunction",
    "ComplexWavefunction",
    "Potential",
    "PotentialSpec",
    "build_potential",
    "DualPair",
    "SolverReport",
    "solve_single_ground",
    "solve_dual_ground",
    "infinite_barrier_report",
    "barrier_sweep",
    "find_crossover",
    "decompose_comparison",
    "prepare_snapshot",
    "sample_run",
    "estimate_phase",
    "ensemble_stats",
]
