import numpy as np
import pytest

from condfrag.energy import CondensateConfig
from condfrag.grid import Grid
from condfrag.potential import PotentialSpec, build_potential
from condfrag.solver import solve_dual_ground, solve_single_ground


@pytest.fixture(scope="session")
def grid():
    return Grid.symmetric(10.0, 1024)


@pytest.fixture(scope="session")
def harmonic(grid):
    return build_potential(PotentialSpec(), grid)


@pytest.fixture(scope="session")
def hard_wall(grid):
    return build_potential(PotentialSpec("hard_wall"), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def released():
    """N = 1000 condensate in a high Gaussian barrier trap, both ground states."""
    g = Grid.symmetric(10.0, 1024)
    U = build_potential(PotentialSpec.for_barrier(20.0, 0.5), g)
    cfg = CondensateConfig(N=1000, g=0.005)
    phi, rep_s = solve_single_ground(cfg, U)
    pair, rep_d = solve_dual_ground(cfg, U)
    assert rep_s.converged and rep_d.converged
    return cfg, phi, pair


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
