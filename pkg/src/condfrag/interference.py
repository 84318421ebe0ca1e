"""Release, free expansion and sequential detection of single and dual condensates.

After the trap is switched off every orbital spreads under the free
Schrodinger equation (no interactions during the flight). Detections are
ideal projective position measurements that remove one particle each.

For the dual state ``|N1, phi_l; N2, phi_r>`` the post-measurement state after
``m`` detections stays inside the span of ``|N1 - j, N2 - (m - j)>``,
``j = 0..m``. Applying the field operator
``Psi(x) = phi_l(x) a_l + phi_r(x) a_r`` to it gives the next coefficient
vector::

    c'_j = phi_l(x) sqrt(N1 - j + 1) c_{j-1} + phi_r(x) sqrt(N2 - m + j) c_j

and the density of the next detection is ``||Psi(x)|c>||^2 / (N - m)``.
Fringes build up run by run with a random spatial phase. For the single
condensate ``|N, phi_s>`` every detection is an independent draw from
``|phi_s(x, t)|^2`` and the fringe phase is the same in every run.

Random numbers come from NumPy's PCG64 bit generator, seeded with the run
seed, so identical seeds reproduce identical runs on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .grid import ComplexWavefunction, Grid, RealWavefunction

__all__ = [
    "ExpansionError",
    "ExpansionSnapshot",
    "free_expand",
    "orbital_overlap",
    "choose_expansion_time",
    "split_halves",
    "prepare_snapshot",
    "fringe_wavenumber",
    "fit_fringe_wavenumber",
    "ConditionalState",
    "detection_density",
    "DetectionRun",
    "sample_run",
    "PhaseEstimate",
    "estimate_phase",
    "EnsembleStats",
    "rayleigh_test",
    "ensemble_stats",
    "make_rng",
]

WRAP_TOL = 1e-8
_TAIL = 1e-12
_EDGE_FRACTION = 0.05
# Well above the 0.5 needed for visible fringes: d/t is a far-field formula and
# is only accurate once the packets have spread well past their initial width.
DEFAULT_OVERLAP = 0.9


class ExpansionError(RuntimeError):
    """The expanded wavefunction does not fit on the grid."""


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class ExpansionSnapshot:
    """Orbitals after free flight for time ``t``.

    ``orbitals`` maps ``"l"``/``"r"`` (dual) or ``"s"`` (single) to complex
    wavefunctions on the enlarged grid. ``separation`` is the distance
    between the centers of the two wells before release.
    """

    t: float
    grid: Grid
    orbitals: dict
    separation: float = math.nan
    mode: str = "dual"
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, key) -> ComplexWavefunction:
        return self.orbitals[key]


def _as_complex(psi) -> ComplexWavefunction:
    if isinstance(psi, ComplexWavefunction):
        return psi
    return ComplexWavefunction.from_real(psi)


def _support_half_width(psi, t: float) -> float:
    """Half-width that holds the packet after time ``t`` up to a small tail."""
    grid = psi.grid
    x = grid.x
    dens = np.abs(psi.values) ** 2
    total = dens.sum()
    below = np.cumsum(dens) / total
    above = np.cumsum(dens[::-1])[::-1] / total
    inside = np.nonzero((below > _TAIL) & (above > _TAIL))[0]
    extent = max(abs(x[inside[0]]), abs(x[inside[-1]]))
    spec = np.abs(scipy.fft.fft(psi.values)) ** 2
    k = 2.0 * np.pi * np.abs(scipy.fft.fftfreq(grid.n_points, grid.dx))
    order = np.argsort(k, kind="stable")
    k_sorted, s_sorted = k[order], spec[order]
    k_above = np.cumsum(s_sorted[::-1])[::-1] / s_sorted.sum()
    k_cut = k_sorted[np.nonzero(k_above > _TAIL)[0][-1]]
    return extent + k_cut * t


def _enlarged_size(grid: Grid, half_width: float) -> int:
    need = int(math.ceil(2.0 * half_width / grid.dx)) + 1
    n = max(need, grid.n_points)
    while True:
        n = scipy.fft.next_fast_len(n)
        if (n - grid.n_points) % 2 == 0:
            return n
        n += 1


def free_expand(
    orbitals,
    t: float,
    n_points: int | None = None,
    max_points: int = 2**20,
    check: bool = True,
) -> ExpansionSnapshot:
    """Evolve each orbital freely (``U = 0``, ``g = 0``) for time ``t``.

    ``orbitals`` is a wavefunction or a mapping of names to wavefunctions on
    one common grid. The evolution is the exact free propagator applied in
    Fourier space on a symmetric grid with the original spacing, enlarged
    (unless ``n_points`` is given) until the packet plus a margin fits.
    Raises ``ExpansionError`` if more than 1e-8 of the norm ends up in the
    outer 5% of the grid on either side, which signals wraparound
    (``check=False`` skips this test).
    """
    if not t >= 0:
        raise ValueError("expansion time must be >= 0")
    if not isinstance(orbitals, dict):
        orbitals = {"s": orbitals}
    items = {name: _as_complex(psi) for name, psi in orbitals.items()}
    grids = {psi.grid for psi in items.values()}
    if len(grids) != 1:
        raise ValueError("orbitals must share one grid")
    (grid,) = grids
    if n_points is None:
        if t == 0:
            n_points = grid.n_points
        else:
            half = max(_support_half_width(psi, t) for psi in items.values())
            n_points = _enlarged_size(grid, 1.25 * half + 10.0 * grid.dx)
    if n_points > max_points:
        raise ExpansionError(f"expansion to t={t} needs {n_points} points (> max_points={max_points})")
    big = grid.enlarged(n_points)
    pad = (n_points - grid.n_points) // 2
    k = 2.0 * np.pi * scipy.fft.fftfreq(n_points, big.dx)
    propagator = np.exp(-0.5j * k**2 * t)
    edge = max(1, int(_EDGE_FRACTION * n_points))
    out = {}
    for name, psi in items.items():
        v = np.zeros(n_points, dtype=complex)
        v[pad : pad + grid.n_points] = psi.values
        if t > 0:
            v = scipy.fft.ifft(propagator * scipy.fft.fft(v))
        dens = np.abs(v) ** 2
        edge_mass = big.dx * max(dens[:edge].sum(), dens[-edge:].sum())
        if check and edge_mass > WRAP_TOL * big.dx * dens.sum():
            raise ExpansionError(
                f"orbital {name!r} reaches the grid edge at t={t} (edge mass {edge_mass:.2e}); enlarge the grid"
            )
        out[name] = ComplexWavefunction(big, v)
    return ExpansionSnapshot(t=float(t), grid=big, orbitals=out)


def orbital_overlap(psi1, psi2) -> float:
    """``int |psi1| |psi2| dx``: 0 for disjoint packets, 1 for equal densities."""
    return psi1.grid.integrate(np.abs(psi1.values) * np.abs(psi2.values))


def split_halves(phi_s: RealWavefunction):
    """Normalized restrictions of ``phi_s`` to ``x < 0`` and ``x > 0``."""
    x = phi_s.grid.x
    left = RealWavefunction(phi_s.grid, np.where(x < 0, phi_s.values, 0.0)).normalize()
    right = RealWavefunction(phi_s.grid, np.where(x > 0, phi_s.values, 0.0)).normalize()
    return left, right


def _center(psi) -> float:
    return psi.grid.integrate(psi.grid.x * np.abs(psi.values) ** 2) / psi.norm_squared()


def choose_expansion_time(
    phi_l,
    phi_r,
    overlap_target: float = DEFAULT_OVERLAP,
    rel_tol: float = 1e-3,
    size_from=None,
) -> float:
    """Smallest flight time (to ``rel_tol``) at which the orbitals overlap by ``overlap_target``.

    ``size_from`` (a wavefunction) sizes the expansion grid instead of the
    orbitals themselves; the orbitals are then not checked for wraparound.
    This is used for the halves of a single condensate, whose cut at the
    origin carries a momentum tail that is irrelevant to their overlap.
    """
    if not 0 < overlap_target < 1:
        raise ValueError("overlap_target must be in (0, 1)")

    def overlap(t):
        if size_from is None:
            snap = free_expand({"l": phi_l, "r": phi_r}, t)
        else:
            n = free_expand(size_from, t).grid.n_points
            snap = free_expand({"l": phi_l, "r": phi_r}, t, n, check=False)
        return orbital_overlap(snap["l"], snap["r"])

    if overlap(0.0) >= overlap_target:
        return 0.0
    lo, hi = 0.0, 1.0
    while overlap(hi) < overlap_target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e4:
            raise ExpansionError("orbitals never reach the requested overlap")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if overlap(mid) >= overlap_target:
            hi = mid
        else:
            lo = mid
    return hi


def prepare_snapshot(
    mode: str,
    phi_s: RealWavefunction | None = None,
    phi_l: RealWavefunction | None = None,
    phi_r: RealWavefunction | None = None,
    t: float | None = None,
    overlap_target: float = DEFAULT_OVERLAP,
) -> ExpansionSnapshot:
    """Release a single (``phi_s``) or dual (``phi_l``, ``phi_r``) condensate.

    With ``t=None`` the flight time is chosen from the left/right orbitals
    (for the single condensate, the two halves of ``phi_s``) so that they
    overlap by ``overlap_target``.
    """
    if mode == "dual":
        if phi_l is None or phi_r is None:
            raise ValueError("dual mode needs phi_l and phi_r")
        left, right = phi_l, phi_r
        orbitals = {"l": phi_l, "r": phi_r}
    elif mode == "single":
        if phi_s is None:
            raise ValueError("single mode needs phi_s")
        left, right = split_halves(phi_s)
        orbitals = {"s": phi_s}
    else:
        raise ValueError(f"unknown mode {mode!r}")
    aux = phi_s if mode == "single" else None
    if t is None:
        t = choose_expansion_time(left, right, overlap_target, size_from=aux)
    snap = free_expand(orbitals, t)
    halves = free_expand({"l": left, "r": right}, t, snap.grid.n_points, check=aux is None)
    return ExpansionSnapshot(
        t=snap.t,
        grid=snap.grid,
        orbitals=snap.orbitals,
        separation=_center(right) - _center(left),
        mode=mode,
        metadata={"overlap": orbital_overlap(halves["l"], halves["r"])},
    )


def fringe_wavenumber(snapshot: ExpansionSnapshot) -> float:
    """Far-field fringe wavenumber ``d / t`` (hbar = m = 1)."""
    if not snapshot.t > 0:
        raise ValueError("fringe wavenumber needs t > 0")
    return snapshot.separation / snapshot.t


def fit_fringe_wavenumber(snapshot: ExpansionSnapshot, floor: float = 1e-3) -> float:
    """Fringe wavenumber from the local phase gradient of ``conj(l) r``.

    Weighted least-squares slope of the unwrapped phase over the region where
    ``|l r|`` exceeds ``floor`` times its maximum. Needs a dual snapshot.
    Useful as the ``k`` override when the flight time is short.
    """
    if snapshot.mode != "dual":
        raise ValueError("fitting the fringe wavenumber needs the dual orbitals")
    lv, rv = snapshot["l"].values, snapshot["r"].values
    w = np.abs(lv * rv)
    mask = w > floor * w.max()
    phase = np.unwrap(np.angle(np.conj(lv[mask]) * rv[mask]))
    slope = np.polyfit(snapshot.grid.x[mask], phase, 1, w=np.sqrt(w[mask]))[0]
    return float(abs(slope))


@dataclass(frozen=True, eq=False)
class ConditionalState:
    """Two-mode state after ``detections`` removals.

    ``coefficients[j]`` is the amplitude of ``|N1 - j, N2 - (m - j)>``.
    """

    N1: int
    N2: int
    coefficients: np.ndarray = field(default_factory=lambda: np.ones(1, dtype=complex))

    @property
    def detections(self) -> int:
        return len(self.coefficients) - 1

    @property
    def remaining(self) -> int:
        return self.N1 + self.N2 - self.detections

    def _ladder(self):
        c = self.coefficients
        m = self.detections
        j = np.arange(m + 1)
        left = np.sqrt(np.clip(self.N1 - j, 0, None))
        right = np.sqrt(np.clip(self.N2 - m + j, 0, None))
        alpha = np.zeros(m + 2, dtype=complex)
        beta = np.zeros(m + 2, dtype=complex)
        alpha[1:] = left * c
        beta[:-1] = right * c
        return alpha, beta

    def density_weights(self):
        """``(A, B, C)`` with ``||Psi(x)|c>||^2 = A|l|^2 + B|r|^2 + 2 Re(C conj(l) r)``."""
        if self.remaining <= 0:
            raise ValueError("all particles have already been detected")
        alpha, beta = self._ladder()
        return float(np.vdot(alpha, alpha).real), float(np.vdot(beta, beta).real), complex(np.vdot(alpha, beta))

    def detect(self, l_x: complex, r_x: complex) -> "ConditionalState":
        """State after a detection where the orbitals take values ``l_x``, ``r_x``."""
        if self.remaining <= 0:
            raise ValueError("all particles have already been detected")
        alpha, beta = self._ladder()
        c = l_x * alpha + r_x * beta
        nrm = np.sqrt(np.vdot(c, c).real)
        if nrm == 0.0:
            raise ValueError("detection at a point of zero probability")
        return ConditionalState(self.N1, self.N2, c / nrm)


def _raw_density(state: ConditionalState, snapshot: ExpansionSnapshot) -> np.ndarray:
    if snapshot.mode == "single":
        if state.remaining <= 0:
            raise ValueError("all particles have already been detected")
        return np.abs(snapshot["s"].values) ** 2 * state.remaining
    a, b, c = state.density_weights()
    lv, rv = snapshot["l"].values, snapshot["r"].values
    return a * np.abs(lv) ** 2 + b * np.abs(rv) ** 2 + 2.0 * np.real(c * np.conj(lv) * rv)


def detection_density(state: ConditionalState, snapshot: ExpansionSnapshot) -> np.ndarray:
    """Probability density of the next detection on ``snapshot.grid``, integrating to 1."""
    p = np.clip(_raw_density(state, snapshot), 0.0, None)
    return p / snapshot.grid.integrate(p)


@dataclass(frozen=True, eq=False)
class DetectionRun:
    positions: np.ndarray
    mode: str
    seed: int | None
    k: float
    theta: float
    magnitude: float
    low_confidence: bool
    indices: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True)
class PhaseEstimate:
    theta: float
    magnitude: float
    low_confidence: bool


def estimate_phase(positions, k: float) -> PhaseEstimate:
    """Fringe phase ``arg sum_j exp(i k x_j)`` in ``(-pi, pi]``.

    ``magnitude`` is ``|mean_j exp(i k x_j)|``. The estimate is flagged as
    low-confidence when the magnitude does not exceed the random-walk level
    ``1/sqrt(M)`` (this includes an exactly vanishing sum).
    """
    x = np.asarray(positions, dtype=float)
    if x.size == 0:
        raise ValueError("need at least one detection")
    if not k > 0:
        raise ValueError("k must be positive")
    z = np.mean(np.exp(1j * k * x))
    theta = float(np.angle(z))
    if theta <= -np.pi:
        theta += 2.0 * np.pi
    mag = float(abs(z))
    return PhaseEstimate(theta, mag, mag <= 1.0 / math.sqrt(x.size))


def sample_run(config, snapshot: ExpansionSnapshot, M: int, seed=None, rng=None, k: float | None = None) -> DetectionRun:
    """Draw ``M`` sequential detections by inverse-CDF sampling on the grid.

    ``config`` supplies ``N1``/``N2`` (for the single condensate only ``N``
    matters). Detected positions are grid points. The run is fully determined
    by ``seed``; alternatively pass an existing ``rng``.
    """
    N = config.N
    if M < 0 or int(M) != M:
        raise ValueError("M must be a non-negative integer")
    if M > N:
        raise ValueError(f"cannot detect M={M} particles out of N={N}")
    if rng is None:
        rng = make_rng(seed)
    if k is None:
        k = fringe_wavenumber(snapshot) if snapshot.t > 0 else 1.0
    grid = snapshot.grid
    x = grid.x
    n1, n2 = (config.N1, config.N2) if snapshot.mode == "dual" else (N, 0)
    state = ConditionalState(n1, n2)
    idx = np.empty(M, dtype=np.int64)
    if snapshot.mode == "single":
        cdf = np.cumsum(np.abs(snapshot["s"].values) ** 2)
        for i in range(M):
            idx[i] = min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), grid.n_points - 1)
    else:
        lv, rv = snapshot["l"].values, snapshot["r"].values
        ll, rr, lr = np.abs(lv) ** 2, np.abs(rv) ** 2, np.conj(lv) * rv
        for i in range(M):
            a, b, c = state.density_weights()
            p = np.clip(a * ll + b * rr + 2.0 * np.real(c * lr), 0.0, None)
            cdf = np.cumsum(p)
            j = min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), grid.n_points - 1)
            idx[i] = j
            state = state.detect(lv[j], rv[j])
    positions = x[idx]
    if M:
        est = estimate_phase(positions, k)
    else:
        est = PhaseEstimate(0.0, 0.0, True)
    return DetectionRun(
        positions=positions,
        mode=snapshot.mode,
        seed=seed,
        k=float(k),
        theta=est.theta,
        magnitude=est.magnitude,
        low_confidence=est.low_confidence,
        indices=idx,
    )


@dataclass(frozen=True)
class EnsembleStats:
    n_runs: int
    mode: str
    circular_mean: float
    R: float
    rayleigh_z: float
    rayleigh_p: float
    uniform_threshold: float
    concentration_threshold: float
    verdict: str

    def to_record(self) -> str:
        return "".join(f"{k}={v!r}\n" if isinstance(v, float) else f"{k}={v}\n" for k, v in self.__dict__.items())


def rayleigh_test(theta) -> tuple:
    """Rayleigh test of circular uniformity; returns ``(Z, p)``.

    ``Z = n R^2``; the p-value uses Zar's series correction.
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    Rn = abs(np.sum(np.exp(1j * theta)))
    z = Rn**2 / n
    p = math.exp(math.sqrt(1.0 + 4.0 * n + 4.0 * (n**2 - Rn**2)) - (1.0 + 2.0 * n))
    return z, min(max(p, 0.0), 1.0)


def ensemble_stats(
    runs,
    concentration_threshold: float = 0.9,
    uniform_factor: float = 1.5,
    alpha: float = 0.05,
) -> EnsembleStats:
    """Circular statistics of the per-run fringe phases.

    Verdicts: ``"concentrated"`` if ``R > concentration_threshold``,
    ``"uniform"`` if ``R < uniform_factor * sqrt(-ln alpha / n)``,
    ``"indeterminate"`` otherwise, and ``"insufficient-runs"`` for fewer than
    two runs. Mixing single and dual runs is an error.
    """
    runs = list(runs)
    modes = {r.mode for r in runs}
    if len(modes) > 1:
        raise ValueError(f"runs mix modes {sorted(modes)}")
    mode = modes.pop() if modes else ""
    n = len(runs)
    theta = np.array([r.theta for r in runs], dtype=float)
    thr_u = uniform_factor * math.sqrt(-math.log(alpha) / n) if n else math.inf
    if n == 0:
        return EnsembleStats(0, mode, math.nan, math.nan, math.nan, math.nan, thr_u, concentration_threshold, "insufficient-runs")
    z = np.mean(np.exp(1j * theta))
    R = float(abs(z))
    zr, p = rayleigh_test(theta)
    if n < 2:
        verdict = "insufficient-runs"
    elif R > concentration_threshold:
        verdict = "concentrated"
    elif R < thr_u:
        verdict = "uniform"
    else:
        verdict = "indeterminate"
    return EnsembleStats(
        n_runs=n,
        mode=mode,
        circular_mean=float(np.angle(z)),
        R=R,
        rayleigh_z=float(zr),
        rayleigh_p=float(p),
        uniform_threshold=thr_u,
        concentration_threshold=concentration_threshold,
        verdict=verdict,
    )
