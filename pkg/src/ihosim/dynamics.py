"""Hamiltonians and propagators on the truncated Fock space.

Time-independent evolution diagonalises H once, block by block: the quadratic
Hamiltonians used here only couple levels of equal parity and are tridiagonal
inside each parity sector, which lets ``scipy.linalg.eigh_tridiagonal`` handle
dimensions in the thousands.  The driven lab-frame trap is integrated with a
midpoint piecewise-constant exponential stepper.
"""
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.sparse import csgraph, csr_matrix
from scipy.special import gammaln

from .errors import (ConfigError, InvalidInputError, StepSizeError, TruncationWarning)
from .operators import (FockSpace, OperatorMatrix, StateVector, hermiticity_defect, ladder,
                        number_operator, quadratures)
from .units import BE9_MASS

KINDS = ("iho", "squeeze", "lab")
STEPS_PER_DRIVE_PERIOD = 40


@dataclass(frozen=True)
class HamiltonianSpec:
    """Which Hamiltonian to build.

    ``iho`` and ``squeeze`` are dimensionless with growth rate ``rate``.  For
    ``lab`` the energy unit is hbar*omega0 and times are measured in the same
    unit as 1/omega0 (seconds if omega0 is in rad/s; the default omega0 = 1
    makes times dimensionless, tau = omega0 t).
    """

    kind: str = "iho"
    rate: float = 1.0
    phase: float = 0.0
    omega0: float = 1.0
    xi: float = 0.0
    omega_m: Optional[float] = None
    mass: float = BE9_MASS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown Hamiltonian kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "lab":
            if not self.omega0 > 0:
                raise ConfigError(f"omega0 must be positive, got {self.omega0}")
            if not 0.0 <= self.xi < 1.0:
                raise ConfigError(f"xi must be in [0, 1), got {self.xi}")
            if self.xi > 0.1:
                warnings.warn(f"xi = {self.xi} is not small; the rotating-wave picture degrades",
                              stacklevel=2)
            if self.omega_m is not None and not self.omega_m > 0:
                raise ConfigError(f"omega_m must be positive, got {self.omega_m}")
        elif not self.rate > 0:
            raise ConfigError(f"rate must be positive, got {self.rate}")

    @property
    def drive_frequency(self):
        return 2.0 * self.omega0 if self.omega_m is None else self.omega_m

    @property
    def lambda_L(self):
        """Effective growth rate (in the units of omega0) of the driven trap."""
        return 0.5 * self.xi * self.omega0

    def effective_iho(self):
        """The rotating-wave squeeze Hamiltonian of a driven trap, in units of lambda_L."""
        return HamiltonianSpec("squeeze", rate=1.0, phase=self.phase)

    def trap_ratio(self, t):
        return 1.0 - self.xi * math.cos(self.drive_frequency * t + self.phase)


def build_hamiltonian(spec, space, t=None):
    if spec.kind == "lab":
        if t is None:
            raise InvalidInputError("the driven lab-frame Hamiltonian needs a time t")
        a, ad = ladder(space)
        x = a.data + ad.data
        r = spec.trap_ratio(t)
        h = np.diag(np.arange(space.dim) + 0.5) + 0.25 * (r * r - 1.0) * (x @ x)
        return OperatorMatrix(h, space, hermitian=True)
    if spec.kind == "iho":
        x, p = quadratures(space, spec.phase)
        h = 0.25 * spec.rate * (p.data @ p.data - x.data @ x.data)
        return OperatorMatrix(0.5 * (h + h.conj().T), space, hermitian=True)
    a, ad = ladder(space)
    e = np.exp(1j * spec.phase)
    a2 = a.data @ a.data
    h = -0.5 * spec.rate * (e * a2 + np.conj(e) * a2.T)
    return OperatorMatrix(h, space, hermitian=True)


def upright_oscillator(space):
    """n + 1/2, the undriven trap in units of hbar*omega0."""
    return OperatorMatrix(np.diag(np.arange(space.dim) + 0.5), space, hermitian=True)


# --- block eigendecomposition ----------------------------------------------

def _tridiagonal_eig(block):
    """Eigendecomposition of a Hermitian tridiagonal block via a diagonal gauge."""
    d = np.real(np.diag(block))
    e = np.diag(block, 1)
    mag = np.abs(e)
    ph = np.ones(len(d), dtype=complex)
    for j, ej in enumerate(e):
        ph[j + 1] = ph[j] * (np.conj(ej) / mag[j] if mag[j] > 0 else 1.0)
    w, v = linalg.eigh_tridiagonal(d, mag)
    if np.allclose(ph, 1.0):
        return w, v
    return w, ph[:, None] * v


def _is_tridiagonal(block):
    n = block.shape[0]
    if n <= 2:
        return True
    i, j = np.nonzero(block)
    return bool(np.all(np.abs(i - j) <= 1))


def block_eigh(h):
    """List of (indices, eigenvalues, eigenvectors) over the coupled blocks of h."""
    h = np.asarray(h)
    off = h - np.diag(np.diag(h))
    if not np.any(off):
        idx = np.arange(h.shape[0])
        return [(idx, np.real(np.diag(h)).copy(), None)]
    n_comp, labels = csgraph.connected_components(csr_matrix(np.abs(h) > 0), directed=False)
    blocks = []
    for c in range(n_comp):
        idx = np.nonzero(labels == c)[0]
        sub = h[np.ix_(idx, idx)]
        if _is_tridiagonal(sub):
            w, v = _tridiagonal_eig(sub)
        else:
            w, v = linalg.eigh(sub)
        blocks.append((idx, w, v))
    return blocks


class Propagator:
    """exp(-i H t) for a fixed Hermitian H, reusing one eigendecomposition."""

    def __init__(self, h):
        if not isinstance(h, OperatorMatrix):
            raise InvalidInputError("Propagator expects an OperatorMatrix")
        defect = hermiticity_defect(h.data)
        if defect > 1e-12:
            raise InvalidInputError(f"Hamiltonian is not Hermitian (defect {defect:.2e})")
        self.space = h.space
        self.blocks = block_eigh(h.data)

    @property
    def eigenvalues(self):
        return np.sort(np.concatenate([w for _, w, _ in self.blocks]))

    def apply(self, amps, t):
        out = np.empty(len(amps), dtype=complex)
        for idx, w, v in self.blocks:
            ph = np.exp(-1j * w * t)
            if v is None:
                out[idx] = ph * amps[idx]
            else:
                out[idx] = v @ (ph * (v.conj().T @ amps[idx]))
        return out

    def evolve(self, state, t):
        if state.space is None or state.space.dim != self.space.dim:
            raise InvalidInputError("state is not in this propagator's Fock space")
        return state.with_amplitudes(self.apply(state.amplitudes, t))

    def unitary(self, t):
        u = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        for idx, w, v in self.blocks:
            if v is None:
                u[idx, idx] = np.exp(-1j * w * t)
            else:
                u[np.ix_(idx, idx)] = (v * np.exp(-1j * w * t)) @ v.conj().T
        return OperatorMatrix(u, self.space)

    def heisenberg(self, op, t):
        """U^dag op U."""
        u = self.unitary(t).data
        return OperatorMatrix(u.conj().T @ op.data @ u, self.space, op.hermitian)


def propagate_exact(h, psi0, t):
    return Propagator(h).evolve(psi0, t)


# --- driven lab-frame trap ------------------------------------------------

def _x_squared_blocks(space):
    a, ad = ladder(space)
    x = a.data + ad.data
    return block_eigh(x @ x)


def _check_step(spec, dt):
    limit = 2.0 * math.pi / (STEPS_PER_DRIVE_PERIOD * spec.drive_frequency)
    if not 0 < dt <= limit * (1 + 1e-12):
        raise StepSizeError(
            f"dt = {dt:.4g} does not resolve the drive; need 0 < dt <= 2 pi/(40 omega_m) = {limit:.4g}")


def propagate_stepped(spec, psi0, t_final, dt, method="interaction", observer=None, every=1):
    """Integrate the driven trap from 0 to t_final; returns the lab-frame state.

    Each step applies the exponential of the Hamiltonian frozen at the step
    midpoint.  ``method="lab"`` does this literally with H_lab(t + dt/2).
    ``method="interaction"`` (default) splits off the free rotation, which is
    exact, and freezes only the modulation term; it is still midpoint and second
    order, but it needs one fixed eigenbasis of X**2 instead of a fresh
    diagonalisation per step.

    ``observer(t, amps_rot)`` is called at t = 0 and every ``every`` steps
    and at the final step with rotating-frame amplitudes; returning False stops the run early.
    """
    if spec.kind != "lab":
        raise InvalidInputError("propagate_stepped integrates the lab-frame driven trap")
    if psi0.space is None:
        raise InvalidInputError("propagate_stepped expects a Fock-basis state")
    _check_step(spec, dt)
    n_steps = max(1, int(math.ceil(t_final / dt - 1e-9)))
    h = t_final / n_steps
    w0 = spec.omega0
    level = np.arange(psi0.space.dim) + 0.5
    norm0 = psi0.norm_sq()

    if method == "interaction":
        blocks = [(idx, w, np.ascontiguousarray(vec), np.ascontiguousarray(vec.T))
                  for idx, w, vec in _x_squared_blocks(psi0.space)]
        psi = psi0.amplitudes.astype(complex)  # rotating frame equals lab frame at t = 0
        if observer is not None and observer(0.0, psi) is False:
            return _from_rotating(psi0, psi, 0.0, w0)
        for s in range(n_steps):
            tm = (s + 0.5) * h
            r = spec.trap_ratio(tm)
            alpha = 0.25 * (r * r - 1.0) * w0 * h
            d = np.exp(1j * level * w0 * tm)
            v = np.conj(d) * psi
            for idx, w, vec, vec_t in blocks:
                v[idx] = _real_apply(vec, vec_t, np.exp(-1j * alpha * w), v[idx])
            psi = d * v
            t_now = (s + 1) * h
            if observer is not None and ((s + 1) % every == 0 or s + 1 == n_steps):
                if observer(t_now, psi) is False:
                    return _from_rotating(psi0, psi, t_now, w0)
        out = _from_rotating(psi0, psi, t_final, w0)
    elif method == "lab":
        psi = psi0.amplitudes.astype(complex)
        if observer is not None and observer(0.0, psi) is False:
            return psi0
        for s in range(n_steps):
            hm = build_hamiltonian(spec, psi0.space, (s + 0.5) * h)
            psi = Propagator(hm).apply(psi, w0 * h)
            t_now = (s + 1) * h
            if observer is not None and ((s + 1) % every == 0 or s + 1 == n_steps):
                if observer(t_now, np.exp(1j * level * w0 * t_now) * psi) is False:
                    break
        out = psi0.with_amplitudes(psi)
    else:
        raise InvalidInputError(f"unknown stepping method {method!r}")
    drift = abs(out.norm_sq() - norm0)
    if drift > 1e-8:
        raise StepSizeError(f"norm drift {drift:.2e} exceeds 1e-8")
    return out


def _real_apply(vec, vec_t, phase, amps):
    # vec is real orthogonal: run both products in real BLAS on (re, im) columns
    c = vec_t @ np.stack([amps.real, amps.imag], 1)
    c = phase * (c[:, 0] + 1j * c[:, 1])
    out = vec @ np.stack([c.real, c.imag], 1)
    return out[:, 0] + 1j * out[:, 1]


def _from_rotating(psi0, psi_rot, t, w0):
    level = np.arange(psi0.space.dim) + 0.5
    return psi0.with_amplitudes(np.exp(-1j * level * w0 * t) * psi_rot)


def to_rotating_frame(psi_lab, omega0, t):
    """Undo the free rotation: c_n -> c_n exp(+i (n + 1/2) omega0 t)."""
    if psi_lab.space is None:
        raise InvalidInputError("to_rotating_frame expects a Fock-basis state")
    level = np.arange(psi_lab.space.dim) + 0.5
    return psi_lab.with_amplitudes(np.exp(1j * level * omega0 * t) * psi_lab.amplitudes)


def fidelity(a, b):
    return abs(a.overlap(b)) ** 2


# --- analytic squeeze operator --------------------------------------------

def _exp_quadratic(coef, dim):
    """Matrix of exp(coef * a_dag**2) on |0>..|dim-1> (exact, lower triangular)."""
    m = np.zeros((dim, dim), dtype=complex)
    lf = gammaln(np.arange(dim) + 1.0)
    if coef == 0:
        return np.eye(dim, dtype=complex)
    for j in range(dim // 2 + 1):
        k = np.arange(0, dim - 2 * j)
        if k.size == 0:
            break
        mag = np.exp(0.5 * (lf[k + 2 * j] - lf[k]) - gammaln(j + 1.0) + j * math.log(abs(coef)))
        m[k + 2 * j, k] = mag * (coef / abs(coef)) ** j
    return m


def squeeze_propagator_oracle(r, space, phase=0.0):
    """Closed-form exp(-i H r) for H = -(e^{i phase} a**2 + h.c.)/2.

    Uses the normal-ordered factorisation
    exp(c a_dag**2) cosh(r)**-(n + 1/2) exp(c' a**2) with c = (i/2) e^{-i phase} tanh r
    and c' = (i/2) e^{i phase} tanh r, whose matrix elements are finite sums.
    """
    if r < 0:
        raise InvalidInputError(f"squeezing parameter must be >= 0, got {r}")
    if math.sinh(r) ** 2 > space.dim / 4:
        warnings.warn(f"sinh^2({r}) exceeds dim/4; truncation will be visible", TruncationWarning,
                      stacklevel=2)
    t = math.tanh(r)
    left = _exp_quadratic(0.5j * np.exp(-1j * phase) * t, space.dim)
    right = _exp_quadratic(0.5j * np.exp(1j * phase) * t, space.dim).T
    mid = np.exp(-(np.arange(space.dim) + 0.5) * math.log(math.cosh(r)))
    return OperatorMatrix(left @ (mid[:, None] * right), space)


def converge_dim(observable, start_dim=64, rtol=1e-4, max_dim=8192):
    """Double dim until ``observable(dim)`` changes by less than rtol (relative).

    Returns (dim, value, history) where history lists (dim, value) pairs.
    """
    history = []
    dim = start_dim
    prev = observable(dim)
    history.append((dim, prev))
    while dim * 2 <= max_dim:
        dim *= 2
        val = observable(dim)
        history.append((dim, val))
        scale = np.max(np.abs(val)) or 1.0
        if np.max(np.abs(np.asarray(val) - np.asarray(prev))) <= rtol * scale:
            return dim, val, history
        prev = val
    warnings.warn(f"dimension did not converge to rtol={rtol} by dim={dim}", TruncationWarning,
                  stacklevel=2)
    return dim, prev, history
