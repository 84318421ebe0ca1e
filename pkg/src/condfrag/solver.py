"""Imaginary-time ground-state solvers for single and dual condensates.

The orbitals are kept as unit-norm components of fixed parity. Each step moves
every component along a preconditioned, projected gradient::

    d = -(K g - <c, K g> / <c, K c> K c),    K = (1 + T + U - min U + V_mf)^-1

and renormalizes (normalized imaginary time with a Sobolev-type
preconditioner; ``K`` is one implicit Euler solve with the current mean
field ``V_mf``). Removing the Lagrange component in the ``K`` metric makes
the fixed points exactly the constrained stationary points. A step is
accepted only if the energy per particle does not go up by more than 1e-12;
otherwise the step size is halved. The step size also shrinks when the
projected-gradient norm grows and is enlarged after clean steps.

The dual solver works on mirror-symmetric pairs ``phi2(x) = phi1(-x)`` with
``N1 = N2 = N/2``, stored as a symmetric component ``S`` and an antisymmetric
component ``A`` of unit norm, with ``phi1 = (S + A)/sqrt(2)`` and
``phi2 = (S - A)/sqrt(2)``. Orthogonality and mirror symmetry then hold by
construction.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .energy import CondensateConfig, apply_single_particle, density_overlap, energy_dual, energy_single
from .grid import Grid, RealWavefunction, gaussian
from .potential import Potential, kinetic_banded, well_center

__all__ = [
    "SolverReport",
    "DualPair",
    "grad_single",
    "project_tangent",
    "grad_dual",
    "dual_pair_energy",
    "solve_single_ground",
    "solve_dual_ground",
    "initial_dual_pair",
]

ENERGY_SLACK = 1e-12
# Summation roundoff in the energy grows with |E|; a step whose energy rises by
# less than this fraction of |E| is indistinguishable from a flat one.
ROUNDOFF_SLACK = 1e-13
DT_GROW = 1.5
# A step that raises the residual by more than this factor shrinks the next one.
RESIDUAL_GROWTH = 1.01
DT_SHRINK = 0.5
DT_MAX = 1e4
DT_MIN = 1e-14


@dataclass
class SolverReport:
    converged: bool
    iterations: int
    final_energy: float
    energy_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    residual: float = math.nan
    chemical_potential: float = math.nan
    overlap: float | None = None
    message: str = ""

    def to_record(self) -> str:
        """Line-oriented ``key=value`` text record."""
        items = [
            ("converged", str(self.converged).lower()),
            ("iterations", str(self.iterations)),
            ("accepted_steps", str(len(self.energy_history) - 1)),
            ("final_energy", repr(self.final_energy)),
            ("residual", repr(self.residual)),
            ("chemical_potential", repr(self.chemical_potential)),
        ]
        if self.overlap is not None:
            items.append(("overlap", repr(self.overlap)))
        if self.message:
            items.append(("message", self.message))
        return "".join(f"{k}={v}\n" for k, v in items)

    def history_csv(self) -> str:
        out = io.StringIO()
        out.write("iter,energy,residual\n")
        for i, (e, r) in enumerate(zip(self.energy_history, self.residual_history)):
            out.write(f"{i},{e!r},{r!r}\n")
        return out.getvalue()


def _symmetric_part(grid: Grid, v):
    return 0.5 * (v + grid.mirror(v))


def _antisymmetric_part(grid: Grid, v):
    return 0.5 * (v - grid.mirror(v))


def _unit(grid: Grid, v):
    nrm = math.sqrt(grid.integrate(v * v))
    if nrm == 0.0 or not math.isfinite(nrm):
        raise ValueError("component has zero norm")
    return v / nrm


def _pin_node(grid: Grid, v, hard_wall: bool):
    if hard_wall and grid.has_center_point:
        v = np.array(v)
        v[grid.n_points // 2] = 0.0
    return v


@dataclass(frozen=True, eq=False)
class DualPair:
    """Mirror-image orthonormal orbitals stored as parity components."""

    grid: Grid
    symmetric: np.ndarray
    antisymmetric: np.ndarray

    def __post_init__(self):
        s = _unit(self.grid, _symmetric_part(self.grid, np.asarray(self.symmetric, float)))
        a = _unit(self.grid, _antisymmetric_part(self.grid, np.asarray(self.antisymmetric, float)))
        s.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "symmetric", s)
        object.__setattr__(self, "antisymmetric", a)

    @classmethod
    def from_orbital(cls, phi1: RealWavefunction) -> "DualPair":
        """Pair generated by ``phi1`` and its mirror image."""
        v = phi1.values
        g = phi1.grid
        return cls(g, _symmetric_part(g, v), _antisymmetric_part(g, v))

    @property
    def phi1(self) -> RealWavefunction:
        return RealWavefunction(self.grid, (self.symmetric + self.antisymmetric) / math.sqrt(2.0))

    @property
    def phi2(self) -> RealWavefunction:
        return RealWavefunction(self.grid, (self.symmetric - self.antisymmetric) / math.sqrt(2.0))


def _require_mirror_split(config: CondensateConfig):
    if config.N % 2:
        raise ValueError(f"the dual condensate needs an even particle number N (got N={config.N}) so that N1 = N2 = N/2")
    if config.N1 != config.N2:
        return config.replace(N1=config.N // 2, N2=config.N // 2)
    return config


def grad_single(config: CondensateConfig, phi0: RealWavefunction, U: Potential) -> np.ndarray:
    """Unprojected functional derivative of the single-condensate energy.

    Returns ``2 N [-1/2 d^2/dx^2 + U + g (N - 1) phi0**2] phi0`` on the grid,
    so that ``dE = dx * sum(grad * delta)`` to first order.
    """
    v = phi0.values
    N, g = config.N, config.g
    return 2.0 * N * (apply_single_particle(v, U) + g * (N - 1) * v**3)


def project_tangent(grad: np.ndarray, phi: RealWavefunction) -> np.ndarray:
    """Remove the component of ``grad`` along ``phi`` (normalization direction)."""
    v = phi.values
    return grad - phi.grid.integrate(grad * v) / phi.grid.integrate(v * v) * v


def _dual_orbital_grads(config, phi1, phi2, U):
    n, g = config.N1, config.g
    v1, v2 = phi1, phi2
    g1 = 2.0 * n * (apply_single_particle(v1, U) + g * (n - 1) * v1**3 + 2.0 * g * n * v2**2 * v1)
    g2 = 2.0 * n * (apply_single_particle(v2, U) + g * (n - 1) * v2**3 + 2.0 * g * n * v1**2 * v2)
    return g1, g2


def grad_dual(config: CondensateConfig, pair: DualPair, U: Potential):
    """Projected gradient of the dual energy in the parity components.

    Returns ``(grad_S, grad_A)``, already projected onto the tangent spaces of
    the two unit spheres and onto their parity subspaces. The stationarity
    condition this encodes on ``phi1`` is the coupled NLSE with effective
    potential ``U + g (N1 - 1) phi1**2 + 2 g N2 phi2**2``.
    """
    config = _require_mirror_split(config)
    grid = pair.grid
    g1, g2 = _dual_orbital_grads(config, pair.phi1.values, pair.phi2.values, U)
    gs = _symmetric_part(grid, (g1 + g2) / math.sqrt(2.0))
    ga = _antisymmetric_part(grid, (g1 - g2) / math.sqrt(2.0))
    s, a = pair.symmetric, pair.antisymmetric
    gs = gs - grid.integrate(gs * s) * s
    ga = ga - grid.integrate(ga * a) * a
    if U.hard_wall:
        gs = _pin_node(grid, gs, True)
        ga = _pin_node(grid, ga, True)
    return gs, ga


def dual_pair_energy(config: CondensateConfig, pair: DualPair, U: Potential):
    config = _require_mirror_split(config)
    return energy_dual(config, pair.phi1, pair.phi2, U, check=False)


def _precondition(U: Potential, mean_field: np.ndarray, r: np.ndarray) -> np.ndarray:
    ab, p = kinetic_banded(U.grid, U.hard_wall)
    m = np.array(ab)
    m[p] += 1.0 + (U.values - U.values.min()) + mean_field
    return solve_banded((p, p), m, r, overwrite_ab=True, check_finite=False)


class _Problem:
    """A constrained minimization over unit-norm parity components."""

    def __init__(self, config, U, projectors):
        self.config = config
        self.U = U
        self.grid = U.grid
        self.projectors = projectors

    def prepare(self, comps):
        out = []
        for c, proj in zip(comps, self.projectors):
            c = _pin_node(self.grid, c, self.U.hard_wall)
            out.append(_unit(self.grid, proj(c)))
        return tuple(out)

    # Subclasses provide energy(comps), gradients(comps) -> per-component
    # unprojected gradients, and mean_field(comps) for the preconditioner.

    def projected(self, comps, grads):
        integrate = self.grid.integrate
        return [gr - integrate(gr * c) * c for c, gr in zip(comps, grads)]

    def residual(self, comps) -> float:
        """Norm of the projected gradient of the energy per particle."""
        pg = self.projected(comps, self.gradients(comps))
        return self.residual_scale * math.sqrt(sum(self.grid.integrate(v * v) for v in pg))

    def direction(self, comps):
        integrate = self.grid.integrate
        mf = self.mean_field(comps)
        dirs = []
        for c, gr in zip(comps, self.gradients(comps)):
            kg = _precondition(self.U, mf, gr)
            kc = _precondition(self.U, mf, c)
            dirs.append(-(kg - integrate(c * kg) / integrate(c * kc) * kc))
        return dirs


def _descend(problem: _Problem, comps):
    config = problem.config
    N = config.N
    alpha = config.dt_imag
    e_cur = problem.energy(comps)
    r_cur = problem.residual(comps)
    energies, residuals = [e_cur], [r_cur]
    de = math.inf
    attempts = 0
    message = ""
    converged = False
    dirs = None
    while True:
        if r_cur <= config.tol_residual and abs(de) / N <= config.tol_energy:
            converged = True
            break
        if attempts >= config.max_iters:
            message = "max_iters reached"
            break
        if alpha < DT_MIN:
            message = "step size underflow"
            break
        attempts += 1
        if dirs is None:
            dirs = problem.direction(comps)
        try:
            trial = problem.prepare([c + alpha * d for c, d in zip(comps, dirs)])
            e_trial = problem.energy(trial)
        except ValueError:
            alpha *= DT_SHRINK
            continue
        if not math.isfinite(e_trial) or e_trial - e_cur > max(ENERGY_SLACK, ROUNDOFF_SLACK * abs(e_cur)):
            alpha *= DT_SHRINK
            continue
        r_trial = problem.residual(trial)
        de = e_trial - e_cur
        if r_trial > RESIDUAL_GROWTH * r_cur:
            alpha *= DT_SHRINK
        else:
            alpha = min(alpha * DT_GROW, DT_MAX)
        comps, e_cur, r_cur = trial, e_trial, r_trial
        dirs = None
        energies.append(e_cur)
        residuals.append(r_cur)
    report = SolverReport(
        converged=converged,
        iterations=attempts,
        final_energy=e_cur,
        energy_history=energies,
        residual_history=residuals,
        residual=r_cur,
        message=message,
    )
    return comps, report


class _SingleProblem(_Problem):
    # gradients() returns H phi, i.e. dE/dphi divided by 2N.
    residual_scale = 2.0

    def energy(self, comps):
        return energy_single(self.config, RealWavefunction(self.grid, comps[0]), self.U)[0]

    def mean_field(self, comps):
        return self.config.g * (self.config.N - 1) * comps[0] ** 2

    def gradients(self, comps):
        v = comps[0]
        return [apply_single_particle(v, self.U) + self.mean_field(comps) * v]


class _DualProblem(_Problem):
    # gradients() returns dE/d(S, A) divided by 2 N1 = N.
    residual_scale = 1.0

    def _orbitals(self, comps):
        s, a = comps
        return (s + a) / math.sqrt(2.0), (s - a) / math.sqrt(2.0)

    def energy(self, comps):
        return dual_pair_energy(self.config, DualPair(self.grid, *comps), self.U)[0]

    def mean_field(self, comps):
        v1, v2 = self._orbitals(comps)
        n, g = self.config.N1, self.config.g
        # Parity-even part of the phi1 mean field, shared by both components.
        return g * (n - 1) * 0.5 * (v1**2 + v2**2) + 2.0 * g * n * 0.5 * (v1**2 + v2**2)

    def gradients(self, comps):
        v1, v2 = self._orbitals(comps)
        g1, g2 = _dual_orbital_grads(self.config, v1, v2, self.U)
        scale = 1.0 / (2.0 * self.config.N1)
        return [
            _symmetric_part(self.grid, (g1 + g2) / math.sqrt(2.0)) * scale,
            _antisymmetric_part(self.grid, (g1 - g2) / math.sqrt(2.0)) * scale,
        ]


def solve_single_ground(
    config: CondensateConfig,
    U: Potential,
    initial: RealWavefunction | None = None,
    parity: str | None = "even",
):
    """Minimize the single-condensate energy over normalized ``phi0``.

    The default start is the oscillator ground state. ``parity="even"``
    (default) or ``"odd"`` projects every iterate onto that parity sector;
    ``None`` leaves it free. With a hard wall the even solution is the
    symmetric member of the degenerate pair.

    Returns ``(phi0, SolverReport)``; non-convergence is reported through
    ``report.converged``.
    """
    grid = U.grid
    N, g = config.N, config.g
    projectors = {
        None: lambda v: v,
        "even": lambda v: _symmetric_part(grid, v),
        "odd": lambda v: _antisymmetric_part(grid, v),
    }
    if parity not in projectors:
        raise ValueError("parity must be None, 'even' or 'odd'")
    if initial is None:
        v0 = gaussian(grid).values
        if parity == "odd":
            v0 = grid.x * v0
    else:
        if initial.grid != grid:
            raise ValueError("initial guess lives on a different grid")
        v0 = initial.values
    problem = _SingleProblem(config, U, [projectors[parity]])
    (v,), report = _descend(problem, problem.prepare([v0]))
    phi0 = RealWavefunction(grid, v)
    hv = apply_single_particle(v, U) + g * (N - 1) * v**3
    report.chemical_potential = grid.integrate(hv * v)
    return phi0, report


def initial_dual_pair(U: Potential, width: float = 1.0) -> DualPair:
    """Mirror Gaussians centered on the two wells, split into parity parts."""
    grid = U.grid
    c = well_center(U.spec) if U.spec is not None else 0.0
    c = max(c, 1.0)
    v = gaussian(grid, center=-c, width=width).values
    v = _pin_node(grid, v, U.hard_wall)
    return DualPair(grid, _symmetric_part(grid, v), _antisymmetric_part(grid, v))


def solve_dual_ground(config: CondensateConfig, U: Potential, initial: DualPair | None = None):
    """Minimize the dual-condensate energy over mirror-symmetric pairs.

    Requires even ``N``; the split is ``N1 = N2 = N/2``. Returns
    ``(DualPair, SolverReport)``. ``report.overlap`` is the density overlap
    of the two orbitals at the final iterate.
    """
    config = _require_mirror_split(config)
    grid = U.grid
    n, g = config.N1, config.g
    pair0 = initial if initial is not None else initial_dual_pair(U)
    if pair0.grid != grid:
        raise ValueError("initial guess lives on a different grid")
    problem = _DualProblem(
        config,
        U,
        [lambda v: _symmetric_part(grid, v), lambda v: _antisymmetric_part(grid, v)],
    )
    comps, report = _descend(problem, problem.prepare([pair0.symmetric, pair0.antisymmetric]))
    pair = DualPair(grid, *comps)
    v1 = pair.phi1.values
    v2 = pair.phi2.values
    h1 = apply_single_particle(v1, U) + g * (n - 1) * v1**3 + 2.0 * g * n * v2**2 * v1
    report.chemical_potential = grid.integrate(h1 * v1)
    report.overlap = density_overlap(pair.phi1, pair.phi2)
    return pair, report
