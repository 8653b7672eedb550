"""Truncated Fock-space operators, canonical states and Fock/grid conversion.

Dimensionless quadratures follow x = a e^{i phi/2} + a^dag e^{-i phi/2} and
p = -i (a e^{i phi/2} - a^dag e^{-i phi/2}), so that [x, p] = 2i away from the
truncation corner.  On a position grid the matching companion oscillator is
H_+ = p_g**2 + x**2/4 with p_g = -i d/dx (p = 2 p_g), whose ground state is
proportional to exp(-x**2/4).
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import ConfigError, CoverageError, InvalidInputError, TruncationError

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10


@dataclass(frozen=True)
class FockSpace:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ConfigError(f"Fock dimension must be an integer >= 2, got {self.dim}")

    @property
    def n(self):
        return np.arange(self.dim)


@dataclass(frozen=True)
class OperatorMatrix:
    data: np.ndarray
    space: FockSpace
    hermitian: bool = False

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.shape != (self.space.dim, self.space.dim):
            raise InvalidInputError(f"matrix shape {d.shape} does not match dim {self.space.dim}")
        if self.hermitian and hermiticity_defect(d) > HERMITIAN_TOL:
            raise InvalidInputError(
                f"operator flagged hermitian but |A - A^dag|_max = {hermiticity_defect(d):.3e}")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def dim(self):
        return self.space.dim

    def dagger(self):
        return OperatorMatrix(self.data.conj().T, self.space, self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.data @ other.data, self.space)
        return self.data @ other

    def __add__(self, other):
        return OperatorMatrix(self.data + other.data, self.space, self.hermitian and other.hermitian)

    def __sub__(self, other):
        return OperatorMatrix(self.data - other.data, self.space, self.hermitian and other.hermitian)

    def scaled(self, c):
        return OperatorMatrix(c * self.data, self.space, self.hermitian and np.isreal(c))

    def expectation(self, state):
        v = state.amplitudes
        return complex(np.vdot(v, self.data @ v))


def hermiticity_defect(m):
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def commutator(a, b):
    return OperatorMatrix(a.data @ b.data - b.data @ a.data, a.space)


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centred grid on [-x_max, x_max].

    Points sit at x_j = -x_max + (j + 1/2) dx so the origin is never sampled,
    which keeps |x|**(-1/2) packet profiles finite and the grid mirror
    symmetric.
    """

    x_max: float
    n_points: int

    def __post_init__(self):
        if not (self.x_max > 0 and math.isfinite(self.x_max)):
            raise ConfigError(f"grid x_max must be positive, got {self.x_max}")
        n = self.n_points
        if int(n) != n or n < 2 or (int(n) & (int(n) - 1)):
            raise ConfigError(f"grid n_points must be a power of two, got {n}")

    @property
    def dx(self):
        return 2.0 * self.x_max / self.n_points

    @property
    def x(self):
        return -self.x_max + (np.arange(self.n_points) + 0.5) * self.dx

    @property
    def k(self):
        """Angular wavenumbers conjugate to x (p_g eigenvalues), FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)


@dataclass(frozen=True)
class StateVector:
    """Amplitudes in either the Fock basis (``space`` set) or on a grid."""

    amplitudes: np.ndarray
    space: Optional[FockSpace] = None
    grid: Optional[GridSpec] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if (self.space is None) == (self.grid is None):
            raise InvalidInputError("StateVector needs exactly one of space or grid")
        size = self.space.dim if self.space is not None else self.grid.n_points
        if a.shape != (size,):
            raise InvalidInputError(f"amplitude shape {a.shape} does not match basis size {size}")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def basis(self):
        return "fock" if self.space is not None else "grid"

    @property
    def weight(self):
        return 1.0 if self.grid is None else self.grid.dx

    def norm_sq(self):
        return float(self.weight * np.sum(np.abs(self.amplitudes) ** 2))

    def normalized(self):
        nrm = self.norm_sq()
        if not nrm > 0:
            raise InvalidInputError("cannot normalise a zero state")
        return self.with_amplitudes(self.amplitudes / math.sqrt(nrm))

    def with_amplitudes(self, amps):
        return StateVector(amps, self.space, self.grid, dict(self.meta))

    def density(self):
        return np.abs(self.amplitudes) ** 2

    def populations(self):
        if self.space is None:
            raise InvalidInputError("populations are defined for Fock states only")
        return self.density()

    def overlap(self, other):
        return complex(self.weight * np.vdot(self.amplitudes, other.amplitudes))


def ladder(space):
    """Return (a, a_dag) with a[n-1, n] = sqrt(n)."""
    if not isinstance(space, FockSpace):
        space = FockSpace(space)
    a = np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), 1)
    return OperatorMatrix(a, space), OperatorMatrix(a.T, space)


def number_operator(space):
    return OperatorMatrix(np.diag(np.arange(space.dim, dtype=float)), space, hermitian=True)


def quadratures(space, phase=0.0):
    a, _ = ladder(space)
    e = np.exp(0.5j * phase)
    am = a.data
    x = e * am + np.conj(e) * am.T
    p = -1j * (e * am - np.conj(e) * am.T)
    return OperatorMatrix(x, space, hermitian=True), OperatorMatrix(p, space, hermitian=True)


def fock_superposition(space, terms):
    """Normalised superposition sum_n c_n |n> from (n, c_n) pairs."""
    amps = np.zeros(space.dim, dtype=complex)
    for n, c in terms:
        if n < 0 or n >= space.dim:
            raise TruncationError(f"level {n} outside Fock space of dim {space.dim}")
        amps[n] += c
    if not np.any(amps):
        raise InvalidInputError("all amplitudes are zero")
    return StateVector(amps, space=space).normalized()


def fock_state(space, n):
    return fock_superposition(space, [(n, 1.0)])


def oscillator_eigenfunctions(n_levels, x):
    """phi_n(x) for H_+ = p_g**2 + x**2/4, shape (n_levels, len(x)).

    phi_n(x) = 2**(-1/4) h_n(x / sqrt(2)) with h_n the orthonormal Hermite
    functions; the phase convention matches a = x/2 + d/dx.
    """
    x = np.asarray(x, dtype=float)
    return 2.0 ** -0.25 * _kernels.hermite_functions(int(n_levels), x / math.sqrt(2.0))


def classical_turning_point(n):
    """Outer turning point of level n of H_+ (x**2/4 = n + 1/2)."""
    return 2.0 * math.sqrt(n + 0.5)


def fock_to_grid(state, grid, leak_tol=1e-6):
    if state.space is None:
        raise InvalidInputError("fock_to_grid expects a Fock-basis state")
    c = state.amplitudes
    occupied = np.nonzero(np.abs(c) > 0)[0]
    n_top = int(occupied[-1]) if occupied.size else 0
    psi = 2.0 ** -0.25 * _kernels.hermite_synthesize(c[: n_top + 1], grid.x / math.sqrt(2.0))
    out = StateVector(psi, grid=grid)
    leaked = abs(state.norm_sq() - out.norm_sq())
    if leaked > leak_tol:
        raise CoverageError(
            f"grid [-{grid.x_max}, {grid.x_max}] with {grid.n_points} points loses {leaked:.2e} "
            f"of the norm for levels up to {n_top} (turning point {classical_turning_point(n_top):.1f})")
    return out


def grid_to_fock(state, space):
    """Project a grid state onto |0>..|dim-1>; returns (state, leaked_norm)."""
    if state.grid is None:
        raise InvalidInputError("grid_to_fock expects a grid state")
    x = state.grid.x
    c = state.grid.dx * 2.0 ** -0.25 * _kernels.hermite_project(
        space.dim, x / math.sqrt(2.0), state.amplitudes)
    leaked = state.norm_sq() - float(np.sum(np.abs(c) ** 2))
    return StateVector(c, space=space), leaked
