"""Where does fragmentation win?

Sweeps the Gaussian barrier height for N = 100, g = 0.5 and bisects for the
height where the single and dual energies cross. Takes a few seconds.
"""

import math

from condfrag.energy import CondensateConfig
from condfrag.fragmentation import barrier_sweep, find_crossover, sign_change_brackets
from condfrag.grid import Grid


def main():
    grid = Grid.symmetric(10.0, 1024)
    cfg = CondensateConfig(N=100, g=0.5)
    b_values = [2.0 * i for i in range(11)] + [math.inf]
    rows = barrier_sweep(cfg, grid, b_values)
    print("     b      E_s/N      E_d/N    E_s - E_d   overlap")
    for r in rows:
        print(f"{r.b:6.1f} {r.E_s / cfg.N:10.5f} {r.E_d / cfg.N:10.5f} {r.delta:+11.5f} {r.overlap:9.2e}")
    brackets = sign_change_brackets(rows)
    if not brackets:
        print("no sign change in this range")
        return
    lo, hi = brackets[0]
    res = find_crossover(cfg, grid, lo.b, hi.b, tol=1e-3)
    print(f"crossover b* = {res.b_star:.4f} (bracket width {res.achieved_tolerance:.1e}, {res.evaluations} evaluations)")


if __name__ == "__main__":
    main()
