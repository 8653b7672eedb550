"""Spin-dependent-force readout of the motional density, and phonon statistics.

The readout kernel follows P_down(t) = int (1 - sin(2 Omega t x + phase)) rho(x) dx
with x the dimensionless displacement; phase 0 gives the sine channel and
phase pi/2 the cosine channel.  Between them they fix the full characteristic
function of rho, which ``reconstruct_density`` inverts.  With this
normalisation P_down(0) = 1 and values lie in [0, 2]; the spin-down
probability itself is P_down/2.
"""
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .errors import BandwidthError, InvalidInputError, TruncationWarning


@dataclass(frozen=True)
class ReadoutSignal:
    times: np.ndarray
    p_down: np.ndarray
    rabi: float
    phase: float

    @property
    def k(self):
        return 2.0 * self.rabi * np.asarray(self.times, dtype=float)


def readout_signal(state, rabi, times, phase=0.0):
    if state.grid is None:
        raise InvalidInputError("readout_signal expects a grid state")
    times = np.asarray(times, dtype=float)
    w = state.grid.dx * state.density()
    s, c = _kernels.trig_moments(2.0 * rabi * times, state.grid.x, w)
    p = 1.0 - (math.cos(phase) * s + math.sin(phase) * c)
    return ReadoutSignal(times, p, float(rabi), float(phase))


@dataclass(frozen=True)
class ReconstructedDensity:
    x: np.ndarray
    density: np.ndarray
    negative_mass: float
    k_max: float
    dk: float
    apodization: Optional[float]

    def l2_error(self, reference):
        ref = np.asarray(reference, dtype=float)
        return float(np.linalg.norm(self.density - ref) / np.linalg.norm(ref))

    def lobe_masses(self):
        """(mass at x < 0, mass at x > 0) by trapezoid quadrature; a sample at x = 0 is split evenly."""
        x, d = self.x, self.density
        w = np.zeros_like(x)
        dx = np.diff(x)
        w[:-1] += 0.5 * dx
        w[1:] += 0.5 * dx
        m = w * d
        mid = 0.5 * float(m[x == 0].sum())
        return float(m[x < 0].sum()) + mid, float(m[x > 0].sum()) + mid


def reconstruct_density(sig0, sig90, x, apodization=None, negative_tol=0.01):
    """Invert a sine/cosine readout pair into the motional density on ``x``.

    chi(k) = (1 - P_90) + i (1 - P_0) is the characteristic function at
    k = 2 Omega t; rho(x) = (1/pi) int_0^kmax w(k) Re[chi(k) e^{-ikx}] dk with
    trapezoid weights.  ``apodization`` sets a Gaussian window
    w(k) = exp(-k^2 / (2 (a kmax)^2)) that trades resolution for less ringing
    when chi has not decayed by kmax; the default None leaves the data as is,
    which is exact for band-limited densities.  The k spacing must
    resolve the support: the result is periodic in x with period 2 pi/dk.
    """
    if abs(math.sin(sig0.phase)) > 1e-12 or abs(math.cos(sig90.phase)) > 1e-12:
        raise InvalidInputError("need one signal at phase 0 and one at phase pi/2")
    k = sig0.k
    if k.shape != sig90.k.shape or not np.allclose(k, sig90.k, rtol=0, atol=1e-12 * max(1.0, k.max())):
        raise InvalidInputError("the two readout channels must share their probe times")
    if k.size < 3 or abs(k[0]) > 1e-12:
        raise InvalidInputError("probe times must start at 0 and hold at least 3 samples")
    dk = np.diff(k)
    if np.ptp(dk) > 1e-9 * dk.mean():
        raise InvalidInputError("probe times must be uniformly spaced")
    dk = float(dk.mean())
    x = np.asarray(x, dtype=float)
    if np.max(np.abs(x)) > math.pi / dk:
        warnings.warn(f"x range exceeds pi/dk = {math.pi / dk:.3g}; the reconstruction aliases",
                      stacklevel=2)
    wt = np.full(k.size, dk)
    wt[0] *= 0.5
    wt[-1] *= 0.5
    if apodization is not None:
        wt = wt * np.exp(-0.5 * (k / (apodization * k[-1])) ** 2)
    cos_part = 1.0 - sig90.p_down
    sin_part = 1.0 - sig0.p_down
    rho = _kernels.cosine_transform(x, k, wt * cos_part / math.pi, wt * sin_part / math.pi)
    total = float(np.trapezoid(np.abs(rho), x)) if x.size > 1 else float(abs(rho).sum())
    neg = float(np.trapezoid(np.clip(-rho, 0.0, None), x)) if x.size > 1 else 0.0
    if total > 0 and neg / total > negative_tol:
        raise BandwidthError(f"reconstructed density has {100 * neg / total:.1f}% negative mass; "
                             "extend the probe time window")
    return ReconstructedDensity(x, rho, neg, float(k[-1]), dk, apodization)


# --- phonon statistics ----------------------------------------------------

@dataclass(frozen=True)
class PhononDistribution:
    populations: np.ndarray
    kind: str
    parameter: float
    tail_mass: float = 0.0
    tail_mean: Optional[float] = None

    @property
    def n(self):
        return np.arange(self.populations.size)

    def mean(self):
        m = float(np.dot(self.n, self.populations))
        return m + (self.tail_mean or 0.0)

    def odd_mass(self):
        return float(self.populations[1::2].sum())


def squeezed_vacuum_populations(r, n_max, tail_tol=1e-8):
    """P_2n = (2n)! tanh^{2n} r / ((2^n n!)^2 cosh r); odd levels are empty.

    ``n_max`` is the highest level kept; the missing probability is reported as
    ``tail_mass`` (warning above ``tail_tol``).
    """
    if r < 0:
        raise InvalidInputError(f"squeezing parameter must be >= 0, got {r}")
    pops = np.zeros(int(n_max) + 1)
    m = np.arange(0, int(n_max) // 2 + 1)
    if r == 0:
        pops[0] = 1.0
    else:
        logp = (gammaln(2 * m + 1.0) + 2 * m * math.log(math.tanh(r))
                - 2 * (m * math.log(2.0) + gammaln(m + 1.0)) - math.log(math.cosh(r)))
        pops[2 * m] = np.exp(logp)
    tail = max(0.0, 1.0 - float(pops.sum()))
    if tail > tail_tol:
        warnings.warn(f"n_max = {n_max} leaves tail mass {tail:.1e} at r = {r}", TruncationWarning,
                      stacklevel=2)
    return PhononDistribution(pops, "squeezed_vacuum", float(r), tail)


def thermal_populations(nbar, n_max):
    """P_n = nbar^n / (1 + nbar)^(n+1), with the geometric tail accounted analytically."""
    if nbar < 0:
        raise InvalidInputError(f"mean phonon number must be >= 0, got {nbar}")
    n = np.arange(int(n_max) + 1)
    if nbar == 0:
        pops = (n == 0).astype(float)
        return PhononDistribution(pops, "thermal", 0.0, 0.0, 0.0)
    q = nbar / (1.0 + nbar)
    pops = (1.0 - q) * q ** n
    big_n = n_max + 1
    tail = q ** big_n
    tail_mean = q ** big_n * (big_n * (1.0 - q) + q) / (1.0 - q)
    return PhononDistribution(pops, "thermal", float(nbar), float(tail), float(tail_mean))


def numeric_populations(state):
    return PhononDistribution(state.populations(), "numeric", float("nan"),
                              max(0.0, 1.0 - state.norm_sq()))


def radiation_report(r, nbar=0.02, n_show=9, times=None):
    """Side-by-side squeezed-vacuum and thermal statistics plus the <n>(t) curve."""
    sq = squeezed_vacuum_populations(r, max(n_show - 1, 400), tail_tol=1.0)
    th = thermal_populations(nbar, max(n_show - 1, 400))
    times = np.linspace(0.0, r, 41) if times is None else np.asarray(times, dtype=float)
    return {
        "n": np.arange(n_show),
        "P_squeezed": sq.populations[:n_show],
        "P_thermal": th.populations[:n_show],
        "even_only": bool(sq.odd_mass() == 0.0),
        "thermal_P1": float(th.populations[1]),
        "mean_squeezed": math.sinh(r) ** 2,
        "mean_thermal": nbar,
        "times": times,
        "mean_curve": np.sinh(times) ** 2,
    }
