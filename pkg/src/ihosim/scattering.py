"""Scattering off the inverted barrier H = p_g**2 - x**2/4 (dimensionless).

Energy conventions.  ``transmission_reflection`` returns the closed-form pair
|T(e)|^2 = 1/(1 + e^{2 pi e}), |R(e)|^2 = 1/(1 + e^{-2 pi e}), i.e. the moduli of the
diagonal and off-diagonal S-matrix elements.  The probability that a particle
of energy E actually crosses the barrier top at x = 0 is |T(-E)|^2 =
1/(1 + e^{-2 pi E}), returned by ``crossing_probability``; below the barrier
(E < 0) this is the tunnelling probability.  Everything that compares against
a simulated packet uses the crossing probability.

Packets are launched from x > 0 moving inward; "transmitted" means x < 0 and
"reflected" means x > 0 after the collision.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.special import expit, loggamma

from .errors import DomainError, InvalidInputError, StepSizeError
from .operators import FockSpace, GridSpec, StateVector, grid_to_fock

TWO_PI = 2.0 * math.pi
# energy averages use the trapezoid rule on +-8 packet widths; for integrands
# analytic in a strip (the logistic has poles at distance pi T) it converges
# geometrically, unlike Gauss-Hermite, which struggles once width >> T
_AVG_U = np.linspace(-8.0, 8.0, 641)
_AVG_W = np.full(_AVG_U.size, _AVG_U[1] - _AVG_U[0]) * np.exp(-_AVG_U ** 2) / math.sqrt(math.pi)
_AVG_W[[0, -1]] *= 0.5

# central-difference stencil for d/dx, eighth order
_D1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


# --- closed forms ---------------------------------------------------------

def smatrix(eps):
    """2x2 S-matrix at dimensionless energy eps (hbar lambda = 1).

    The prefactor Gamma(1/2 - i eps) e^{-+ pi eps/2} is evaluated through
    log-gamma so large |eps| neither overflows nor underflows early.
    """
    eps = float(eps)
    lg = loggamma(0.5 - 1j * eps)
    diag = np.exp(lg - 0.5 * math.pi * eps - 0.25j * math.pi)
    off = np.exp(lg + 0.5 * math.pi * eps + 0.25j * math.pi)
    return np.array([[diag, off], [off, diag]]) / math.sqrt(TWO_PI)


def transmission_reflection(eps):
    """(|T|^2, |R|^2) = (1/(1 + e^{2 pi eps}), 1/(1 + e^{-2 pi eps})); sums to 1."""
    eps = np.asarray(eps, dtype=float)
    return expit(-TWO_PI * eps), expit(TWO_PI * eps)


def crossing_probability(energy, temperature=1.0 / TWO_PI):
    """Probability that a particle of energy E ends on the far side of the barrier."""
    return expit(np.asarray(energy, dtype=float) / temperature)


def phase_shift(eps):
    """arg Gamma(1/2 - i eps), continuous in eps."""
    return np.imag(loggamma(0.5 - 1j * np.asarray(eps, dtype=float)))


def phase_derivative(eps, h=1e-5):
    """d/d eps of arg Gamma(1/2 - i eps) by central differences (the time delay)."""
    return (phase_shift(np.asarray(eps) + h) - phase_shift(np.asarray(eps) - h)) / (2.0 * h)


def energy_distribution(energy, eps0, width):
    """|f(E)|^2 for the Gaussian packet: exp(-(E - eps0)^2/width^2)/(sqrt(pi) width)."""
    e = np.asarray(energy, dtype=float)
    return np.exp(-((e - eps0) / width) ** 2) / (math.sqrt(math.pi) * width)


def energy_averaged(fn, eps0, width):
    """Integral of |f(E)|^2 fn(E) dE; ``fn`` must accept an array of energies."""
    return float(np.dot(_AVG_W, fn(eps0 + width * _AVG_U)))


def averaged_crossing(eps0, width, temperature=1.0 / TWO_PI):
    return energy_averaged(lambda e: crossing_probability(e, temperature), eps0, width)


# --- packets --------------------------------------------------------------

@dataclass(frozen=True)
class PacketSpec:
    """Incident packet: Gaussian energy profile around eps0 with the given width.

    ``t_start`` is the launch time on the packet's own clock, where t = 0 is
    the moment its centre would reach |x| = 1; the centre starts at
    |x| = exp(-t_start).
    """

    eps0: float
    width: float
    t_start: float = -3.0
    side: str = "right"

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidInputError(f"packet width must be positive, got {self.width}")
        if self.side != "right":
            raise InvalidInputError("only packets incident from the right are supported")

    @property
    def centre(self):
        return math.exp(-self.t_start)

    @property
    def log_spread(self):
        """1/e half-width of |F|^2 in log|x|."""
        return 1.0 / self.width


def _envelope(z, width):
    return math.sqrt(width / math.sqrt(math.pi)) * np.exp(-0.5 * (z * width) ** 2)


def packet_profile(spec, x, t):
    """Unnormalised incoming-branch profile |x|^{-1/2} e^{-i(eps0 ln|x| + x^2/4)} F(t + ln|x|)."""
    ax = np.abs(x)
    lx = np.log(ax)
    return ax ** -0.5 * np.exp(-1j * (spec.eps0 * lx + 0.25 * x * x)) * _envelope(t + lx, spec.width)


def incident_packet(spec, grid, t=None, symmetric=False, inner_tol=1e-8, edge_tol=1e-8):
    """Incident packet on the grid, renormalised to unit norm.

    By default only the x > 0 branch is populated (one-sided launch) and the
    launch is checked: the packet must neither touch the barrier region
    |x| < 1 nor the outer 10% of the grid.  ``symmetric=True`` returns the
    parity-even profile used for Fock-basis fidelity checks, without checks.
    """
    t = spec.t_start if t is None else t
    x = grid.x
    psi = packet_profile(spec, x, t)
    if not symmetric:
        psi = np.where(x > 0, psi, 0.0)
    nrm = math.sqrt(grid.dx * np.sum(np.abs(psi) ** 2))
    if not nrm > 0:
        raise DomainError("packet has no support on the grid")
    state = StateVector(psi / nrm, grid=grid, meta={"eps0": spec.eps0, "width": spec.width, "t": t})
    if not symmetric:
        rho = state.density() * grid.dx
        inner = float(rho[np.abs(x) < 1.0].sum())
        edge = float(rho[np.abs(x) > 0.9 * grid.x_max].sum())
        if inner > inner_tol:
            raise DomainError(f"packet already overlaps the barrier at launch (mass {inner:.1e} in |x| < 1); "
                              "launch earlier or widen the energy width")
        if edge > edge_tol:
            raise DomainError(f"packet touches the grid edge at launch (mass {edge:.1e}); enlarge x_max")
    return state


def asymptotic_densities(spec, grid, t):
    """Asymptotic reflected and transmitted densities after the collision.

    Each outgoing lobe is |x|^{-1} |F(t - ln|x| - phi'(eps0))|^2 weighted by the
    crossing (transmitted, x < 0) or non-crossing (reflected, x > 0)
    probability at eps0.  Returns (density_R, density_T) on grid.x.
    """
    x = grid.x
    ax = np.abs(x)
    lobe = _envelope(t - np.log(ax) - phase_derivative(spec.eps0), spec.width) ** 2 / ax
    p_t = float(crossing_probability(spec.eps0))
    return np.where(x > 0, (1.0 - p_t) * lobe, 0.0), np.where(x < 0, p_t * lobe, 0.0)


eq8_densities = asymptotic_densities  # name kept for the public API contract


# --- split-step propagation -------------------------------------------------

def absorbing_potential(grid, strength, start_fraction=0.6, power=2):
    """gamma(x) = strength * clip((|x| - s L)/((1 - s) L), 0, 1)**power."""
    ax = np.abs(grid.x)
    xa = start_fraction * grid.x_max
    return strength * np.clip((ax - xa) / (grid.x_max - xa), 0.0, 1.0) ** power


class SplitStep:
    """Strang-split propagator for H = p_g**2 - x**2/4 - i gamma(x)."""

    def __init__(self, grid, dt, absorber=None):
        self.grid = grid
        self.dt = dt
        x = grid.x
        pot = 0.25 * x * x * 1j
        if absorber is not None:
            pot = pot - absorber
        self.half = np.exp(0.5 * dt * pot)
        self.kinetic = np.exp(-1j * grid.k ** 2 * dt)

    def step(self, psi):
        return self.half * np.fft.ifft(self.kinetic * np.fft.fft(self.half * psi))

    def run(self, psi, n_steps, callback=None):
        for s in range(n_steps):
            psi = self.step(psi)
            if callback is not None:
                callback(s + 1, psi)
        return psi


@dataclass
class ScatterResult:
    x: np.ndarray
    density_T: np.ndarray
    density_R: np.ndarray
    P_T: float
    P_R: float
    eps0: float
    width: float
    t_final: float
    P_T_analytic: float
    norm_drift: float
    cleared: bool
    state: Optional[StateVector] = None
    absorbed_T: float = 0.0
    absorbed_R: float = 0.0
    probe_times: Optional[np.ndarray] = None
    probe_density: Optional[np.ndarray] = None
    snapshots: list = field(default_factory=list)
    T_eff_fit: Optional[float] = None
    meta: dict = field(default_factory=dict)


def scatter_evolve(spec, grid, t_final, dt, absorber=None, absorber_start=0.6, probe_x=None,
                   n_probe=400, snapshot_times=(), clear_radius=2.0, clear_tol=1e-4, edge_tol=1e-8):
    """Launch ``spec`` and propagate it on ``grid`` up to time t_final.

    With ``absorber=None`` the evolution is strictly unitary and the run must
    end before either lobe reaches the outer 5% of the grid (DomainError).
    Passing an absorber strength switches on gamma(x) in the outer part of
    the grid; the mass it removes on each side is accumulated, so
    P_T = (mass at x < 0) + (mass absorbed at x < 0), and likewise P_R.  Mass
    left in |x| < clear_radius at the end means the collision is unfinished;
    that is reported through ``cleared`` and a warning.
    """
    psi0 = incident_packet(spec, grid)
    n_steps = int(math.ceil((t_final - spec.t_start) / dt - 1e-9))
    if n_steps < 1:
        raise InvalidInputError("t_final must be later than the launch time")
    h = (t_final - spec.t_start) / n_steps
    x = grid.x
    gamma = None if absorber is None else absorbing_potential(grid, absorber, absorber_start)
    prop = SplitStep(grid, h, gamma)
    edge = np.abs(x) > (0.98 if gamma is not None else 0.95) * grid.x_max
    if gamma is not None:
        sink = np.nonzero(gamma > 0)[0]
        loss = 1.0 - np.abs(prop.half[sink]) ** 2
        left = x[sink] < 0
    probe_i = None if probe_x is None else int(np.argmin(np.abs(x - probe_x)))
    every = max(1, n_steps // n_probe)
    snap_steps = {int(round((ts - spec.t_start) / h)): ts for ts in snapshot_times}
    pt, pd, snaps = [], [], []
    absorbed = np.zeros(2)
    edge_max = 0.0

    def absorb(psi):
        lost = grid.dx * np.abs(psi[sink]) ** 2 * loss
        absorbed[0] += lost[left].sum()
        absorbed[1] += lost[~left].sum()

    psi = psi0.amplitudes.copy()
    if probe_i is not None:
        pt.append(spec.t_start)
        pd.append(abs(psi[probe_i]) ** 2)
    for s in range(1, n_steps + 1):
        if gamma is None:
            psi = prop.step(psi)
        else:
            absorb(psi)
            a = prop.half * psi
            b = np.fft.ifft(prop.kinetic * np.fft.fft(a))
            absorb(b)
            psi = prop.half * b
        if s % 50 == 0 or s == n_steps:
            edge_max = max(edge_max, grid.dx * float(np.sum(np.abs(psi[edge]) ** 2)))
        if probe_i is not None and (s % every == 0 or s == n_steps):
            pt.append(spec.t_start + s * h)
            pd.append(abs(psi[probe_i]) ** 2)
        if s in snap_steps:
            snaps.append((spec.t_start + s * h, np.abs(psi) ** 2))
    if edge_max > edge_tol:
        raise DomainError(f"density {edge_max:.1e} reached the grid edge; enlarge x_max, "
                          "stop earlier or add an absorber")
    rho = np.abs(psi) ** 2
    total = grid.dx * rho.sum() + absorbed.sum()
    drift = abs(total - 1.0)
    if drift > 1e-6:
        raise StepSizeError(f"norm drift {drift:.1e} exceeds 1e-6; reduce dt")
    dens_t = np.where(x < 0, rho, 0.0)
    dens_r = np.where(x > 0, rho, 0.0)
    p_t = float(grid.dx * dens_t.sum() + absorbed[0])
    p_r = float(grid.dx * dens_r.sum() + absorbed[1])
    centre_mass = float(grid.dx * rho[np.abs(x) < clear_radius].sum())
    cleared = centre_mass < clear_tol
    if not cleared:
        warnings.warn(f"mass {centre_mass:.1e} still within |x| < {clear_radius}; "
                      "the packet has not cleared the barrier", stacklevel=2)
    return ScatterResult(
        x=x, density_T=dens_t, density_R=dens_r, P_T=p_t, P_R=p_r, eps0=spec.eps0,
        width=spec.width, t_final=t_final, P_T_analytic=averaged_crossing(spec.eps0, spec.width),
        norm_drift=drift, cleared=cleared, state=StateVector(psi, grid=grid),
        absorbed_T=float(absorbed[0]), absorbed_R=float(absorbed[1]),
        probe_times=np.array(pt) if probe_i is not None else None,
        probe_density=np.array(pd) if probe_i is not None else None, snapshots=snaps,
        meta={"dt": h, "n_steps": n_steps, "centre_mass": centre_mass, "absorber": absorber,
              "grid": {"x_max": grid.x_max, "n_points": grid.n_points}})


# --- energy-resolved transmission -----------------------------------------

@dataclass
class TransmissionSpectrum:
    """Time records of one broad probe packet, from which T(E) follows.

    A(t) = <psi0|psi(t)> gives the probe's energy density
    P(E) = Re int_0^inf A(t) e^{iEt} dt / pi; psi and d psi/dx recorded at
    detectors on the far side give the transmitted current per unit energy
    J(E) = -2 Im(conj(g) g') / (2 pi), with g(E) = int psi(x_d, t) e^{iEt} dt.
    The transmission is J(E)/P(E), averaged over detectors.
    """

    times: np.ndarray
    autocorrelation: np.ndarray
    detector_x: np.ndarray
    detector_psi: np.ndarray
    detector_dpsi: np.ndarray
    probe: PacketSpec
    meta: dict = field(default_factory=dict)

    def _fourier(self, energies, series):
        t = self.times
        w = np.full(t.size, t[1] - t[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        ph = np.exp(1j * np.outer(np.atleast_1d(energies), t))
        return ph @ (series * (w if series.ndim == 1 else w[:, None]))

    def spectral_density(self, energies):
        return self._fourier(energies, self.autocorrelation).real / math.pi

    def transmission_by_detector(self, energies):
        g = self._fourier(energies, self.detector_psi)
        dg = self._fourier(energies, self.detector_dpsi)
        current = -2.0 * np.imag(np.conj(g) * dg) / TWO_PI
        return current / self.spectral_density(energies)[:, None]

    def transmission(self, energies):
        return self.transmission_by_detector(energies).mean(axis=1)

    def packet_transmission(self, eps0, width):
        """Crossing probability of a packet (eps0, width) from the measured T(E)."""
        return energy_averaged(self.transmission, eps0, width)


def transmission_spectrum(grid=None, dt=0.005, t_record=36.0, probe=None, detectors=(-6.0, -3.0),
                          absorber_strength=80.0, absorber_start=0.6):
    """Record a broad probe packet to measure T(E) on roughly |E| <= 3.5.

    The probe is absorbed in the outer 40% of the grid so the records can run
    long enough (t_record) for the slowly decaying near-barrier amplitude of
    near-threshold energies to die out.
    """
    grid = GridSpec(200.0, 2 ** 15) if grid is None else grid
    probe = PacketSpec(0.0, 2.0, -3.0) if probe is None else probe
    psi0 = incident_packet(probe, grid)
    prop = SplitStep(grid, dt, absorbing_potential(grid, absorber_strength, absorber_start))
    n_steps = int(round(t_record / dt))
    x = grid.x
    det = [int(np.argmin(np.abs(x - d))) for d in detectors]
    stencil = _D1 / grid.dx
    a = np.empty(n_steps + 1, dtype=complex)
    p = np.empty((n_steps + 1, len(det)), dtype=complex)
    dp = np.empty_like(p)
    v0 = psi0.amplitudes

    def record(s, psi):
        a[s] = grid.dx * np.vdot(v0, psi)
        for m, i in enumerate(det):
            p[s, m] = psi[i]
            dp[s, m] = stencil @ psi[i - 4:i + 5]

    psi = v0.copy()
    record(0, psi)
    prop.run(psi, n_steps, record)
    return TransmissionSpectrum(
        times=np.arange(n_steps + 1) * dt, autocorrelation=a, detector_x=x[det],
        detector_psi=p, detector_dpsi=dp, probe=probe,
        meta={"dt": dt, "t_record": t_record, "absorber_strength": absorber_strength,
              "absorber_start": absorber_start,
              "grid": {"x_max": grid.x_max, "n_points": grid.n_points}})


def fit_temperature(eps0, p_t, width=0.0):
    """Fit P_T(eps0) = int |f|^2 / (1 + e^{-E/T}) dE for T (plain logistic when width = 0)."""
    eps0 = np.asarray(eps0, dtype=float)
    p_t = np.asarray(p_t, dtype=float)
    if eps0.size < 2:
        raise InvalidInputError("need at least two energies to fit a temperature")

    def model(temp):
        if width > 0:
            return np.array([averaged_crossing(e, width, temp) for e in eps0])
        return crossing_probability(eps0, temp)

    sol = optimize.least_squares(lambda lt: model(math.exp(lt[0])) - p_t, x0=[math.log(0.2)])
    return float(math.exp(sol.x[0]))


def preparation_fidelity(spec, levels, grid):
    """F_in(L) = sum_{n <= L} |<n|Psi_in>|^2 for the symmetric packet at t = 0.

    Returns (fidelities for each L in ``levels``, all Fock populations, leaked norm).
    """
    levels = np.atleast_1d(np.asarray(levels, dtype=int))
    psi = incident_packet(spec, grid, t=0.0, symmetric=True)
    edge = grid.dx * float(np.sum(psi.density()[np.abs(grid.x) > 0.9 * grid.x_max]))
    if edge > 1e-10:
        raise DomainError(f"symmetric packet reaches the grid edge (mass {edge:.1e})")
    fock, leaked = grid_to_fock(psi, FockSpace(int(levels.max()) + 1))
    pops = fock.populations()
    cum = np.cumsum(pops)
    return cum[levels], pops, leaked
