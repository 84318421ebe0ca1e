"""Single versus dual condensate in a double well.

Infinite-barrier constructions, barrier-height sweeps and the location of the
crossover where the dual condensate becomes the lower-energy state.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .energy import (
    CondensateConfig,
    EnergyBreakdown,
    density_overlap,
    energy_dual,
    energy_single,
    quartic_integral,
    single_particle_energy,
)
from .grid import Grid, RealWavefunction
from .potential import PotentialSpec, build_potential
from .solver import DualPair, SolverReport, solve_dual_ground, solve_single_ground

__all__ = [
    "SymmetryError",
    "NoCrossoverError",
    "antisymmetric_partner",
    "construct_left_right",
    "InfiniteBarrierReport",
    "infinite_barrier_report",
    "SweepRow",
    "default_barrier_values",
    "evaluate_barrier",
    "barrier_sweep",
    "sweep_csv",
    "CrossoverResult",
    "find_crossover",
    "sign_change_brackets",
    "ComparisonReport",
    "decompose_comparison",
]

SYMMETRY_TOL = 1e-9


class SymmetryError(ValueError):
    pass


class NoCrossoverError(ValueError):
    pass


def antisymmetric_partner(phi_s: RealWavefunction) -> RealWavefunction:
    """Sign-flipped reflection of a hard-wall solution, ``-sign(x) phi_s``.

    With an impenetrable wall at x = 0 this is exactly degenerate with
    ``phi_s``, and the sign convention makes ``(phi_s + phi_a)/sqrt(2)``
    live on ``x < 0``.
    """
    return RealWavefunction(phi_s.grid, -np.sign(phi_s.grid.x) * phi_s.values)


def _check_parity(phi: RealWavefunction, sign: int, name: str):
    v = phi.values
    err = np.max(np.abs(v - sign * phi.grid.mirror(v)))
    if err > SYMMETRY_TOL * max(1.0, np.max(np.abs(v))):
        kind = "symmetric" if sign > 0 else "antisymmetric"
        raise SymmetryError(f"{name} is not {kind} (max deviation {err:.2e})")


def construct_left_right(phi_s: RealWavefunction, phi_a: RealWavefunction):
    """Return ``(phi_l, phi_r) = ((phi_s + phi_a)/sqrt 2, (phi_s - phi_a)/sqrt 2)``."""
    if phi_s.grid != phi_a.grid:
        raise ValueError("phi_s and phi_a live on different grids")
    _check_parity(phi_s, +1, "phi_s")
    _check_parity(phi_a, -1, "phi_a")
    r = math.sqrt(0.5)
    phi_l = RealWavefunction(phi_s.grid, r * (phi_s.values + phi_a.values))
    phi_r = RealWavefunction(phi_s.grid, r * (phi_s.values - phi_a.values))
    return phi_l, phi_r


@dataclass(frozen=True, eq=False)
class InfiniteBarrierReport:
    config: CondensateConfig
    phi_s: RealWavefunction
    phi_a: RealWavefunction
    phi_l: RealWavefunction
    phi_r: RealWavefunction
    eps_s: float
    eps_l: float
    quartic_s: float
    quartic_l: float
    overlap_lr: float
    interaction_single: float
    interaction_dual: float
    predicted_single: float
    predicted_dual: float
    E_s: float
    E_d_construction: float
    E_d_solver: float
    breakdown_single: EnergyBreakdown
    breakdown_construction: EnergyBreakdown
    report_single: SolverReport
    report_dual: SolverReport
    dual_pair: DualPair

    @property
    def dual_favored(self) -> bool:
        return self.E_d_construction < self.E_s

    def to_record(self) -> str:
        keys = [
            "eps_s", "eps_l", "quartic_s", "quartic_l", "overlap_lr",
            "interaction_single", "interaction_dual", "predicted_single", "predicted_dual",
            "E_s", "E_d_construction", "E_d_solver",
        ]
        lines = [f"{k}={getattr(self, k)!r}" for k in keys]
        lines.append(f"dual_favored={str(self.dual_favored).lower()}")
        return "\n".join(lines) + "\n"


def infinite_barrier_report(config: CondensateConfig, grid: Grid) -> InfiniteBarrierReport:
    """Hard-wall single condensate, its left/right split, and the dual solution.

    Raises ``RuntimeError`` when a solver does not converge.
    """
    if config.N % 2:
        raise ValueError(f"N must be even for the N/2 + N/2 split (got N={config.N})")
    U = build_potential(PotentialSpec("hard_wall"), grid)
    phi_s, rep_s = solve_single_ground(config, U)
    if not rep_s.converged:
        raise RuntimeError(f"hard-wall single-condensate solve did not converge: {rep_s.message}")
    phi_a = antisymmetric_partner(phi_s)
    phi_l, phi_r = construct_left_right(phi_s, phi_a)
    half = config.replace(N1=config.N // 2, N2=config.N // 2)
    E_s, b_s = energy_single(config, phi_s, U)
    E_c, b_c = energy_dual(half, phi_l, phi_r, U)
    pair, rep_d = solve_dual_ground(half, U)
    if not rep_d.converged:
        raise RuntimeError(f"hard-wall dual solve did not converge: {rep_d.message}")
    N, g = config.N, config.g
    q_s = quartic_integral(phi_s)
    return InfiniteBarrierReport(
        config=config,
        phi_s=phi_s,
        phi_a=phi_a,
        phi_l=phi_l,
        phi_r=phi_r,
        eps_s=single_particle_energy(phi_s, U),
        eps_l=single_particle_energy(phi_l, U),
        quartic_s=q_s,
        quartic_l=quartic_integral(phi_l),
        overlap_lr=density_overlap(phi_l, phi_r),
        interaction_single=b_s.interaction,
        interaction_dual=b_c.interaction,
        predicted_single=0.5 * g * N * (N - 1) * q_s,
        predicted_dual=0.5 * g * N * (N - 2) * q_s,
        E_s=E_s,
        E_d_construction=E_c,
        E_d_solver=rep_d.final_energy,
        breakdown_single=b_s,
        breakdown_construction=b_c,
        report_single=rep_s,
        report_dual=rep_d,
        dual_pair=pair,
    )


@dataclass(frozen=True)
class SweepRow:
    b: float
    E_s: float
    E_d: float
    delta: float
    overlap: float
    converged_s: bool
    converged_d: bool


def default_barrier_values() -> list:
    """``0, 0.5, ..., 20`` followed by the hard-wall sentinel ``inf``."""
    return [0.5 * i for i in range(41)] + [math.inf]


def evaluate_barrier(config: CondensateConfig, grid: Grid, b: float, barrier_width: float = 0.5, warm=None):
    """Solve both problems at barrier height ``b`` (``inf`` = hard wall).

    ``warm`` is an optional ``(phi0, pair)`` used as initial guesses. Returns
    ``(SweepRow, (phi0, pair))``.
    """
    U = build_potential(PotentialSpec.for_barrier(b, barrier_width), grid)
    phi_init, pair_init = warm if warm is not None else (None, None)
    phi0, rep_s = solve_single_ground(config, U, initial=phi_init)
    pair, rep_d = solve_dual_ground(config, U, initial=pair_init)
    row = SweepRow(
        b=float(b),
        E_s=rep_s.final_energy,
        E_d=rep_d.final_energy,
        delta=rep_s.final_energy - rep_d.final_energy,
        overlap=rep_d.overlap,
        converged_s=rep_s.converged,
        converged_d=rep_d.converged,
    )
    return row, (phi0, pair)


def barrier_sweep(
    config: CondensateConfig,
    grid: Grid,
    b_values=None,
    barrier_width: float = 0.5,
    warm_start: bool = True,
    threads: int = 1,
) -> list:
    """Compare single and dual energies over ascending barrier heights.

    With ``warm_start`` each height starts from the previous solutions and the
    sweep is sequential; otherwise rows are cold-started and may be computed
    on ``threads`` workers. Rows whose solvers did not converge are kept and
    flagged.
    """
    b_values = default_barrier_values() if b_values is None else list(b_values)
    if not b_values:
        raise ValueError("b_values must be non-empty")
    if any(b2 < b1 for b1, b2 in zip(b_values, b_values[1:])):
        raise ValueError("b_values must be ascending")
    if config.N % 2:
        raise ValueError(f"N must be even for the dual condensate (got N={config.N})")
    if not warm_start:
        def run(b):
            return evaluate_barrier(config, grid, b, barrier_width)[0]

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(run, b_values))
        return [run(b) for b in b_values]
    rows, warm = [], None
    for b in b_values:
        row, warm = evaluate_barrier(config, grid, b, barrier_width, warm)
        rows.append(row)
    return rows


def sweep_csv(rows) -> str:
    out = io.StringIO()
    out.write("b,E_s,E_d,delta,overlap,converged_s,converged_d\n")
    for r in rows:
        out.write(
            f"{r.b!r},{r.E_s!r},{r.E_d!r},{r.delta!r},{r.overlap!r},"
            f"{str(r.converged_s).lower()},{str(r.converged_d).lower()}\n"
        )
    return out.getvalue()


def sign_change_brackets(rows) -> list:
    """Consecutive finite-``b`` row pairs across which ``delta`` changes sign."""
    out = []
    for r1, r2 in zip(rows, rows[1:]):
        if math.isfinite(r1.b) and math.isfinite(r2.b) and r1.delta * r2.delta < 0:
            out.append((r1, r2))
    return out


@dataclass(frozen=True)
class CrossoverResult:
    b_star: float
    bracket: tuple
    achieved_tolerance: float
    delta_bracket: tuple
    evaluations: int

    def to_record(self) -> str:
        return (
            f"b_star={self.b_star!r}\n"
            f"b_lo={self.bracket[0]!r}\n"
            f"b_hi={self.bracket[1]!r}\n"
            f"delta_lo={self.delta_bracket[0]!r}\n"
            f"delta_hi={self.delta_bracket[1]!r}\n"
            f"achieved_tolerance={self.achieved_tolerance!r}\n"
            f"evaluations={self.evaluations}\n"
        )


def find_crossover(
    config: CondensateConfig,
    grid: Grid,
    b_lo: float,
    b_hi: float,
    barrier_width: float = 0.5,
    tol: float = 1e-2,
) -> CrossoverResult:
    """Bisect on the barrier height until the sign-change bracket is ``<= tol`` wide.

    Every evaluation is cold-started, so ``delta(b)`` does not depend on the
    bisection path. Raises ``NoCrossoverError`` when ``delta`` has the same
    sign at both ends.
    """
    if not (math.isfinite(b_lo) and math.isfinite(b_hi)) or not b_lo < b_hi:
        raise ValueError("need finite b_lo < b_hi")
    if not tol > 0:
        raise ValueError("tol must be positive")

    def delta(b):
        return evaluate_barrier(config, grid, b, barrier_width)[0].delta

    d_lo, d_hi = delta(b_lo), delta(b_hi)
    n_eval = 2
    if d_lo * d_hi >= 0:
        raise NoCrossoverError(
            f"no sign change of E_s - E_d in [{b_lo}, {b_hi}]: delta = {d_lo:.6g}, {d_hi:.6g}"
        )
    lo, hi = b_lo, b_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        d_mid = delta(mid)
        n_eval += 1
        if d_mid == 0.0:
            lo = hi = mid
            d_lo = d_hi = 0.0
            break
        if (d_mid < 0) == (d_lo < 0):
            lo, d_lo = mid, d_mid
        else:
            hi, d_hi = mid, d_mid
    return CrossoverResult(
        b_star=0.5 * (lo + hi),
        bracket=(lo, hi),
        achieved_tolerance=hi - lo,
        delta_bracket=(d_lo, d_hi),
        evaluations=n_eval,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Quadratic and linear pieces of the single and dual interaction energies."""

    E_s_quad: float
    E_d_quad: float
    E_d_quad_similar_density: float
    exchange: float
    E_s_lin: float
    E_d_lin: float
    quartic_0: float
    quartic_1: float
    quartic_2: float
    density_mismatch: float

    @property
    def lin_difference(self) -> float:
        return self.E_d_lin - self.E_s_lin

    @property
    def more_localized(self) -> bool:
        return self.quartic_1 > self.quartic_0 and self.quartic_2 > self.quartic_0

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["lin_difference"] = self.lin_difference
        return d


def decompose_comparison(config: CondensateConfig, phi0: RealWavefunction, pair) -> ComparisonReport:
    """Split both interaction energies into N^2 pieces, exchange and self-terms.

    ``pair`` is a ``DualPair`` or a tuple ``(phi1, phi2)``; the occupations are
    ``config.N1`` and ``config.N2``.
    """
    phi1, phi2 = (pair.phi1, pair.phi2) if isinstance(pair, DualPair) else pair
    N, n1, n2, g = config.N, config.N1, config.N2, config.g
    q0, q1, q2 = quartic_integral(phi0), quartic_integral(phi1), quartic_integral(phi2)
    d12 = density_overlap(phi1, phi2)
    exchange = 2.0 * g * n1 * n2 * d12
    mismatch = np.max(np.abs(n1 * phi1.density() + n2 * phi2.density() - N * phi0.density()))
    return ComparisonReport(
        E_s_quad=0.5 * g * N**2 * q0,
        E_d_quad=0.5 * g * (n1**2 * q1 + n2**2 * q2) + exchange,
        E_d_quad_similar_density=0.5 * g * N**2 * q0 + g * n1 * n2 * d12,
        exchange=exchange,
        E_s_lin=-0.5 * g * N * q0,
        E_d_lin=-0.5 * g * (n1 * q1 + n2 * q2),
        quartic_0=q0,
        quartic_1=q1,
        quartic_2=q2,
        density_mismatch=float(mismatch),
    )
