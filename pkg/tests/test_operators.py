import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ihosim import (ConfigError, CoverageError, FockSpace, GridSpec, InvalidInputError,
                    OperatorMatrix, StateVector, TruncationError, fock_state, fock_superposition,
                    fock_to_grid, grid_to_fock, ladder, quadratures)
from ihosim.operators import (classical_turning_point, commutator, hermiticity_defect,
                              number_operator, oscillator_eigenfunctions)


def test_ladder_elements(space64):
    a, ad = ladder(space64)
    assert a.data[2, 3] == pytest.approx(math.sqrt(3))
    assert np.allclose(ad.data, a.data.T)
    assert np.allclose(np.diag(ad.data @ a.data), np.arange(64))


@given(st.floats(0, 2 * math.pi))
def test_canonical_commutator_below_truncation(phi):
    space = FockSpace(20)
    x, p = quadratures(space, phi)
    c = commutator(x, p).data
    # [x, p] = 2i except in the last level where the truncation bites
    assert np.allclose(c[:-1, :-1], 2j * np.eye(19), atol=1e-12)
    assert hermiticity_defect(x.data) == 0 and hermiticity_defect(p.data) < 1e-15


def test_quadrature_phase_rotation(space64):
    x0, p0 = quadratures(space64, 0.0)
    xpi, _ = quadratures(space64, math.pi)
    # e^{i pi/2} = i, so the phase-pi quadrature is i a - i a^dag
    a, ad = ladder(space64)
    assert np.allclose(xpi.data, 1j * a.data - 1j * ad.data)
    assert np.allclose(x0.data, (a + ad).data)
    assert np.allclose(p0.data, -1j * (a - ad).data)


def test_operator_matrix_validation(space64):
    with pytest.raises(InvalidInputError):
        OperatorMatrix(np.zeros((3, 3)), space64)
    m = np.zeros((64, 64), dtype=complex)
    m[0, 1] = 1.0
    with pytest.raises(InvalidInputError):
        OperatorMatrix(m, space64, hermitian=True)
    op = OperatorMatrix(m, space64)
    with pytest.raises(ValueError):
        op.data[0, 0] = 1.0


def test_operator_algebra(space64):
    n = number_operator(space64)
    psi = fock_state(space64, 5)
    assert n.expectation(psi) == pytest.approx(5.0)
    assert (n + n).expectation(psi) == pytest.approx(10.0)
    assert (n - n.scaled(0.5)).expectation(psi) == pytest.approx(2.5)
    assert np.allclose(n.dagger().data, n.data)


def test_fock_space_rejects_small_dims():
    for bad in (0, 1, 2.5):
        with pytest.raises(ConfigError):
            FockSpace(bad)


def test_superposition_normalised_and_guarded(space64):
    psi = fock_superposition(space64, [(0, 1.0), (1, 1.0)])
    assert psi.norm_sq() == pytest.approx(1.0)
    assert psi.populations()[:2] == pytest.approx([0.5, 0.5])
    with pytest.raises(TruncationError):
        fock_superposition(space64, [(64, 1.0)])
    with pytest.raises(InvalidInputError):
        fock_superposition(space64, [(3, 0.0)])


def test_state_vector_requires_one_basis(space64):
    with pytest.raises(InvalidInputError):
        StateVector(np.ones(64))
    with pytest.raises(InvalidInputError):
        StateVector(np.ones(63), space=space64)


def test_grid_is_cell_centred_and_symmetric():
    g = GridSpec(10.0, 64)
    assert np.allclose(g.x, -g.x[::-1])
    assert not np.any(g.x == 0)
    assert g.dx == pytest.approx(20.0 / 64)
    with pytest.raises(ConfigError):
        GridSpec(10.0, 100)
    with pytest.raises(ConfigError):
        GridSpec(-1.0, 64)


def test_eigenfunctions_orthonormal(fine_grid):
    phi = oscillator_eigenfunctions(40, fine_grid.x)
    gram = fine_grid.dx * phi @ phi.T
    assert np.allclose(gram, np.eye(40), atol=1e-10)
    # ground state is (2 pi)^{-1/4} exp(-x^2/4)
    assert np.allclose(phi[0], (2 * math.pi) ** -0.25 * np.exp(-fine_grid.x ** 2 / 4), atol=1e-14)


def test_eigenfunctions_match_ladder_action(fine_grid):
    # a = x/2 + d/dx on the grid, so (x/2 + d/dx) phi_n = sqrt(n) phi_{n-1}
    x = fine_grid.x
    phi = oscillator_eigenfunctions(6, x)
    d = np.fft.ifft(1j * fine_grid.k * np.fft.fft(phi[5])).real
    lhs = 0.5 * x * phi[5] + d
    assert np.max(np.abs(lhs - math.sqrt(5) * phi[4])) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=30).filter(lambda c: sum(abs(z) ** 2 for z in c) > 1e-3))
def test_fock_grid_round_trip(coeffs):
    space = FockSpace(32)
    psi = fock_superposition(space, list(enumerate(coeffs)))
    grid = GridSpec(30.0, 2 ** 11)
    on_grid = fock_to_grid(psi, grid)
    assert on_grid.norm_sq() == pytest.approx(1.0, abs=1e-10)
    back, leaked = grid_to_fock(on_grid, space)
    assert np.allclose(back.amplitudes, psi.amplitudes, atol=1e-10)
    assert abs(leaked) < 1e-10


def test_fock_to_grid_coverage_guard():
    psi = fock_state(FockSpace(60), 50)
    with pytest.raises(CoverageError):
        fock_to_grid(psi, GridSpec(8.0, 256))
    assert classical_turning_point(50) == pytest.approx(2 * math.sqrt(50.5))
