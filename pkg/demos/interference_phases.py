"""Release, detect, and read off a fringe phase.

A single condensate split in two gives the same relative phase every run.
Two independent (Fock-state) halves give fringes in every run too, but with
a phase that is random from run to run. Forty runs per case here.
"""

import numpy as np

from condfrag.energy import CondensateConfig
from condfrag.grid import Grid
from condfrag.interference import ensemble_stats, prepare_snapshot, sample_run
from condfrag.potential import PotentialSpec, build_potential
from condfrag.solver import solve_dual_ground, solve_single_ground


def main():
    grid = Grid.symmetric(10.0, 1024)
    U = build_potential(PotentialSpec.for_barrier(20.0, 0.5), grid)
    cfg = CondensateConfig(N=400, g=0.0125)
    phi, _ = solve_single_ground(cfg, U)
    pair, _ = solve_dual_ground(cfg, U)
    snaps = {
        "single": prepare_snapshot("single", phi_s=phi),
        "dual": prepare_snapshot("dual", phi_l=pair.phi1, phi_r=pair.phi2),
    }
    seeds = np.random.SeedSequence(2024).generate_state(80, dtype=np.uint64)
    for (mode, snap), ss in zip(snaps.items(), (seeds[:40], seeds[40:])):
        runs = [sample_run(cfg, snap, 200, seed=int(s)) for s in ss]
        st = ensemble_stats(runs)
        shown = " ".join(f"{r.theta:+.2f}" for r in runs[:8])
        print(f"{mode:>6}: t = {snap.t:.2f}, first phases {shown} ...")
        print(f"        R = {st.R:.3f}, Rayleigh p = {st.rayleigh_p:.3g}, verdict {st.verdict}")


if __name__ == "__main__":
    main()
