import math

import numpy as np
import pytest
from scipy import stats

from condfrag.energy import CondensateConfig
from condfrag.grid import ComplexWavefunction, Grid, RealWavefunction, gaussian
from condfrag.interference import (
    ConditionalState,
    DetectionRun,
    ExpansionError,
    choose_expansion_time,
    detection_density,
    ensemble_stats,
    estimate_phase,
    fit_fringe_wavenumber,
    free_expand,
    fringe_wavenumber,
    orbital_overlap,
    prepare_snapshot,
    rayleigh_test,
    sample_run,
    split_halves,
)


@pytest.fixture(scope="module")
def dual_snapshot(released):
    cfg, phi, pair = released
    return prepare_snapshot("dual", phi_l=pair.phi1, phi_r=pair.phi2)


@pytest.fixture(scope="module")
def single_snapshot(released):
    cfg, phi, pair = released
    return prepare_snapshot("single", phi_s=phi)


# free expansion


def test_zero_time_is_identity(grid):
    psi = gaussian(grid, 0.5, 0.8)
    snap = free_expand(psi, 0.0)
    assert snap.grid == grid
    assert np.array_equal(snap["s"].values, psi.values.astype(complex))


@pytest.mark.parametrize("t", [0.5, 2.0, 6.0])
def test_gaussian_spreading(t):
    # |psi|^2 ~ exp(-x^2 / w^2) with w(t) = sqrt(1 + t^2) for w(0) = 1.
    g = Grid.symmetric(8.0, 512)
    snap = free_expand(gaussian(g), t)
    psi = snap["s"]
    x = snap.grid.x
    width = math.sqrt(2.0 * snap.grid.integrate(x**2 * psi.density()))
    assert width == pytest.approx(math.sqrt(1 + t**2), abs=1e-6)
    assert psi.norm_squared() == pytest.approx(1.0, abs=1e-9)
    exact = (1 / math.sqrt(math.pi * (1 + t**2))) * np.exp(-(x**2) / (1 + t**2))
    assert np.max(np.abs(psi.density() - exact)) < 1e-9


def test_expansion_errors():
    g = Grid.symmetric(8.0, 256)
    with pytest.raises(ExpansionError):
        free_expand(gaussian(g), 5.0, n_points=256)
    with pytest.raises(ExpansionError):
        free_expand(gaussian(g), 5.0, max_points=300)
    with pytest.raises(ValueError):
        free_expand(gaussian(g), -1.0)


def test_norm_and_overlap_of_snapshot(dual_snapshot):
    for name in ("l", "r"):
        assert dual_snapshot[name].norm_squared() == pytest.approx(1.0, abs=1e-9)
    assert dual_snapshot.metadata["overlap"] >= 0.5
    assert abs(dual_snapshot["l"].inner(dual_snapshot["r"])) < 1e-9


def test_expansion_time_is_minimal(released):
    _, _, pair = released
    t = choose_expansion_time(pair.phi1, pair.phi2, 0.6)
    at = free_expand({"l": pair.phi1, "r": pair.phi2}, t)
    before = free_expand({"l": pair.phi1, "r": pair.phi2}, 0.98 * t)
    assert orbital_overlap(at["l"], at["r"]) >= 0.6 > orbital_overlap(before["l"], before["r"])


def test_split_halves(released):
    _, phi, _ = released
    l, r = split_halves(phi)
    assert l.norm_squared() == pytest.approx(1.0) and np.all(l.values[phi.grid.x > 0] == 0)
    assert np.allclose(l.values[::-1], r.values, rtol=0, atol=1e-9)


def test_fringe_wavenumber_far_field(dual_snapshot):
    k = fringe_wavenumber(dual_snapshot)
    assert k == pytest.approx(dual_snapshot.separation / dual_snapshot.t)
    # d / t is the far-field limit; the local fringes are somewhat wider at finite t.
    assert 0.85 * k < fit_fringe_wavenumber(dual_snapshot) < k


@pytest.mark.parametrize("t", [1.0, 3.0, 8.0])
def test_fitted_wavenumber_for_gaussian_pair(t):
    # Unit-width packets at -+a: arg(conj(l) r) has slope 2 a t / (1 + t^2).
    a = 2.5
    g = Grid.symmetric(12.0, 1024)
    snap = free_expand({"l": gaussian(g, -a), "r": gaussian(g, a)}, t)
    snap = type(snap)(t=t, grid=snap.grid, orbitals=snap.orbitals, separation=2 * a, mode="dual")
    assert fit_fringe_wavenumber(snap) == pytest.approx(2 * a * t / (1 + t**2), rel=1e-6)


# conditional state and densities


def _random_orbitals(rng, n=64):
    g = Grid.symmetric(5.0, n)
    l = ComplexWavefunction(g, rng.standard_normal(n) + 1j * rng.standard_normal(n)).normalize()
    r = ComplexWavefunction(g, rng.standard_normal(n) + 1j * rng.standard_normal(n))
    r = ComplexWavefunction(g, r.values - l.inner(r) * l.values).normalize()
    return g, l, r


def _snap(g, l, r):
    from condfrag.interference import ExpansionSnapshot

    return ExpansionSnapshot(t=1.0, grid=g, orbitals={"l": l, "r": r}, separation=1.0, mode="dual")


def test_conditional_state_stays_normalized(rng):
    g, l, r = _random_orbitals(rng)
    snap = _snap(g, l, r)
    state = ConditionalState(6, 4)
    for m in range(10):
        p = detection_density(state, snap)
        assert g.integrate(p) == pytest.approx(1.0, abs=1e-9)
        j = rng.choice(g.n_points, p=p * g.dx / np.sum(p * g.dx))
        state = state.detect(l.values[j], r.values[j])
        assert abs(np.sum(np.abs(state.coefficients) ** 2) - 1) <= 1e-12
        assert state.detections == m + 1
    with pytest.raises(ValueError):
        detection_density(state, snap)


@pytest.mark.parametrize("n1,n2", [(5, 5), (7, 2), (3, 0)])
def test_first_detection_is_average_density(rng, n1, n2):
    g, l, r = _random_orbitals(rng)
    p = detection_density(ConditionalState(n1, n2), _snap(g, l, r))
    expected = (n1 * l.density() + n2 * r.density()) / (n1 + n2)
    assert np.allclose(p, expected, rtol=1e-12, atol=1e-14)


def test_two_particle_conditional_density(rng):
    g, l, r = _random_orbitals(rng)
    snap = _snap(g, l, r)
    j = 17
    state = ConditionalState(1, 1).detect(l.values[j], r.values[j])
    p = detection_density(state, snap)
    expected = np.abs(l.values[j] * r.values + r.values[j] * l.values) ** 2
    expected /= g.integrate(expected)
    assert np.allclose(p, expected, rtol=1e-10, atol=1e-14)


def test_single_mode_density_ignores_history(single_snapshot):
    s = single_snapshot
    base = detection_density(ConditionalState(1000, 0), s)
    later = ConditionalState(1000, 0, np.ones(51, dtype=complex) / math.sqrt(51))
    assert np.allclose(detection_density(later, s), base, rtol=1e-12)
    assert np.allclose(base, s["s"].density() / s["s"].norm_squared(), rtol=1e-12)


# sampling


def test_sample_run_basics(released, dual_snapshot):
    cfg = released[0]
    empty = sample_run(cfg, dual_snapshot, 0, seed=1)
    assert empty.positions.size == 0 and empty.low_confidence
    with pytest.raises(ValueError):
        sample_run(cfg, dual_snapshot, cfg.N + 1, seed=1)
    a = sample_run(cfg, dual_snapshot, 50, seed=123)
    b = sample_run(cfg, dual_snapshot, 50, seed=123)
    c = sample_run(cfg, dual_snapshot, 50, seed=124)
    assert np.array_equal(a.positions, b.positions) and a.theta == b.theta
    assert not np.array_equal(a.positions, c.positions)
    x = dual_snapshot.grid.x
    assert np.all((a.positions >= x[0]) & (a.positions <= x[-1]))
    assert -math.pi < a.theta <= math.pi


def test_single_detections_are_exchangeable(released, single_snapshot):
    # Early and late detections of the single condensate come from one law.
    cfg = released[0]
    rng = np.random.default_rng(5)
    early, late = [], []
    for _ in range(40):
        run = sample_run(cfg, single_snapshot, 100, rng=rng)
        early.append(run.positions[:50])
        late.append(run.positions[50:])
    p = stats.ks_2samp(np.concatenate(early), np.concatenate(late)).pvalue
    assert p > 0.01


# phase estimation and ensembles


def test_aligned_phases_give_zero():
    k = 2.0
    x = 2 * math.pi / k * np.arange(-5, 6)
    est = estimate_phase(x, k)
    assert est.theta == pytest.approx(0.0, abs=1e-12) and est.magnitude == pytest.approx(1.0)


def test_phase_at_half_period_maps_to_pi():
    assert estimate_phase([math.pi], 1.0).theta == pytest.approx(math.pi)


def test_zero_magnitude_is_flagged_not_raised():
    est = estimate_phase([0.0, math.pi], 1.0)
    assert est.low_confidence and est.magnitude < 1e-15


@pytest.mark.parametrize("theta0", [math.pi / 2, -2.0, 0.3])
def test_phase_recovered_from_fringe_density(theta0):
    # Positions drawn from 1 + cos(k x - theta0) over many periods.
    rng = np.random.default_rng(11)
    k = 3.0
    x = rng.uniform(0, 40 * 2 * math.pi / k, 400_000)
    keep = rng.uniform(0, 2, x.size) < 1 + np.cos(k * x - theta0)
    est = estimate_phase(x[keep][:10_000], k)
    assert est.theta == pytest.approx(theta0, abs=0.05)


def test_translation_covariance(rng):
    x = rng.normal(size=200)
    k, shift = 1.7, 0.9
    a = estimate_phase(x, k).theta
    b = estimate_phase(x + shift, k).theta
    assert np.angle(np.exp(1j * (b - a - k * shift))) == pytest.approx(0.0, abs=1e-10)


def test_estimate_phase_errors():
    with pytest.raises(ValueError):
        estimate_phase([], 1.0)
    with pytest.raises(ValueError):
        estimate_phase([1.0], 0.0)


def _runs(thetas, mode="dual"):
    return [DetectionRun(np.zeros(1), mode, i, 1.0, float(t), 1.0, False) for i, t in enumerate(thetas)]


def test_ensemble_verdicts():
    same = ensemble_stats(_runs([0.4] * 10))
    assert same.R == pytest.approx(1.0) and same.verdict == "concentrated"
    grid = np.linspace(-math.pi, math.pi, 201)[1:]
    flat = ensemble_stats(_runs(grid))
    assert flat.R < 1e-12 and flat.verdict == "uniform"
    assert ensemble_stats(_runs([0.1])).verdict == "insufficient-runs"
    with pytest.raises(ValueError):
        ensemble_stats(_runs([0.1, 0.2]) + _runs([0.3], "single"))
    assert flat.uniform_threshold == pytest.approx(1.5 / math.sqrt(200) * math.sqrt(-math.log(0.05)))
    assert "verdict=uniform" in flat.to_record()


def test_rayleigh_null_distribution():
    # Under uniform phases the p-value is itself (nearly) uniform.
    rng = np.random.default_rng(3)
    p = np.array([rayleigh_test(rng.uniform(-math.pi, math.pi, 200))[1] for _ in range(4000)])
    assert abs(np.mean(p < 0.05) - 0.05) < 0.012
    assert stats.kstest(p, "uniform").pvalue > 0.001
    z, p1 = rayleigh_test(np.zeros(50))
    assert z == pytest.approx(50.0) and p1 < 1e-15
