import math

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from condfrag.grid import Grid
from condfrag.potential import (
    Potential,
    PotentialSpec,
    build_potential,
    kinetic_banded,
    kinetic_matrix,
    well_center,
)


def test_barrier_off_is_harmonic(grid):
    U = build_potential(PotentialSpec(barrier_height=0.0), grid)
    assert np.array_equal(U.values, 0.5 * grid.x**2)
    assert not U.hard_wall


def test_barrier_value_at_origin():
    g = Grid.symmetric(10.0, 1025)
    U = build_potential(PotentialSpec(barrier_height=10.0, barrier_width=0.5), g)
    assert U.values[512] == 10.0
    assert U.values[0] == pytest.approx(50.0, rel=1e-12)


def test_hard_wall_flag(grid):
    U = build_potential(PotentialSpec("hard_wall"), grid)
    assert U.hard_wall
    assert np.array_equal(U.values, 0.5 * grid.x**2)
    assert PotentialSpec.for_barrier(math.inf).hard_wall


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(barrier_height=-1.0),
        dict(barrier_width=0.0),
        dict(barrier_width=-0.5),
        dict(kind="square"),
        dict(barrier_height=math.inf),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(ValueError):
        PotentialSpec(**kwargs)


def test_well_center_is_potential_minimum():
    spec = PotentialSpec(barrier_height=10.0, barrier_width=0.5)
    c = well_center(spec)
    x = np.linspace(0.01, 5, 200001)
    u = 0.5 * x**2 + 10.0 * np.exp(-(x**2) / 0.5)
    assert c == pytest.approx(x[np.argmin(u)], abs=1e-4)
    assert well_center(PotentialSpec(barrier_height=0.1)) == 0.0


def test_shifted_potential(grid):
    U = build_potential(PotentialSpec(), grid).shifted(3.0)
    assert isinstance(U, Potential)
    assert np.allclose(U.values, 0.5 * grid.x**2 + 3.0)


@pytest.mark.parametrize("order", [2, 4])
@pytest.mark.parametrize("wall", [False, True])
def test_kinetic_matrix_symmetric(order, wall):
    g = Grid.symmetric(4.0, 64, order)
    T = kinetic_matrix(g, wall).toarray()
    assert np.array_equal(T, T.T)


@pytest.mark.parametrize("n", [64, 65])
def test_banded_matches_sparse(n):
    g = Grid.symmetric(4.0, n)
    for wall in (False, True):
        ab, p = kinetic_banded(g, wall)
        T = kinetic_matrix(g, wall).toarray()
        dense = np.zeros_like(T)
        for k in range(-p, p + 1):
            for j in range(n):
                i = j - k
                if 0 <= i < n:
                    dense[i, j] = ab[p + i - j, j]
        assert np.array_equal(dense, T)


def test_second_derivative_of_polynomial():
    # The 4th-order stencil is exact for polynomials up to degree 5 away from the edges.
    g = Grid.symmetric(2.0, 101)
    x = g.x
    f = x**5 - 2 * x**3 + x
    T = kinetic_matrix(g, False)
    interior = slice(3, -3)
    assert np.allclose((T @ f)[interior], (-0.5 * (20 * x**3 - 12 * x))[interior], atol=1e-9)


@pytest.mark.parametrize("n", [512, 513])
def test_hard_wall_spectrum_is_degenerate(n):
    # With the wall, the lowest levels are the first odd oscillator level (1.5)
    # twice: once symmetric (|x|-like) and once antisymmetric.
    g = Grid.symmetric(10.0, n)
    U = build_potential(PotentialSpec("hard_wall"), g)
    H = kinetic_matrix(g, True) + np.diag(U.values)
    if g.has_center_point:
        keep = np.arange(n) != n // 2
        H = H[keep][:, keep]
    vals = np.sort(spla.eigsh(H, k=4, sigma=0.0, which="LM")[0])
    assert vals[0] == pytest.approx(1.5, abs=1e-6)
    assert vals[1] - vals[0] < 1e-10
    assert vals[2] == pytest.approx(3.5, abs=1e-5)
