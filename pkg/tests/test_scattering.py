import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import digamma

from ihosim import (DomainError, GridSpec, InvalidInputError, PacketSpec, crossing_probability,
                    fit_temperature, incident_packet, preparation_fidelity, scatter_evolve, smatrix,
                    transmission_reflection, transmission_spectrum)
from ihosim.scattering import (SplitStep, absorbing_potential, asymptotic_densities,
                               averaged_crossing, energy_averaged, energy_distribution,
                               phase_derivative)

BIG = GridSpec(200.0, 2 ** 15)


@given(st.floats(-8, 8))
def test_smatrix_unitary(eps):
    s = smatrix(eps)
    assert np.allclose(s.conj().T @ s, np.eye(2), atol=1e-12)
    t2, r2 = transmission_reflection(eps)
    assert abs(s[0, 0]) ** 2 == pytest.approx(float(t2), rel=1e-10, abs=1e-300)
    assert abs(s[0, 1]) ** 2 == pytest.approx(float(r2), rel=1e-10)


@given(st.floats(-5, 5))
def test_transmission_reflection_identities(eps):
    t2, r2 = transmission_reflection(eps)
    assert t2 + r2 == pytest.approx(1.0, abs=1e-15)
    assert t2 / r2 == pytest.approx(math.exp(-2 * math.pi * eps), rel=1e-9)
    # crossing probability is the transmission of the reflected energy label
    assert crossing_probability(eps) == pytest.approx(float(transmission_reflection(-eps)[0]), abs=1e-15)


def test_smatrix_extreme_energies_finite():
    for eps in (-60.0, 60.0):
        s = smatrix(eps)
        assert np.all(np.isfinite(s))
        assert abs(abs(s[0, 0]) ** 2 + abs(s[0, 1]) ** 2 - 1) < 1e-12


def test_crossing_probability_limits():
    assert crossing_probability(0.0) == 0.5
    assert crossing_probability(3.0) > 0.99999999
    assert crossing_probability(-0.5) == pytest.approx(1 / (1 + math.exp(math.pi)))


@pytest.mark.parametrize("eps", [-2.0, -0.3, 0.0, 1.7])
def test_phase_derivative_is_digamma(eps):
    assert phase_derivative(eps) == pytest.approx(-digamma(0.5 - 1j * eps).real, rel=1e-8)


def test_energy_average_quadrature():
    e = np.linspace(-30, 30, 60001)
    dens = energy_distribution(e, 0.3, 1.2)
    assert np.trapezoid(dens, e) == pytest.approx(1.0, rel=1e-10)
    brute = np.trapezoid(dens * crossing_probability(e), e)
    assert averaged_crossing(0.3, 1.2) == pytest.approx(brute, rel=1e-8)
    # narrow packets reduce to the pointwise value
    assert energy_averaged(np.cos, 0.4, 1e-4) == pytest.approx(math.cos(0.4), rel=1e-7)


def test_packet_spec_validation():
    with pytest.raises(InvalidInputError):
        PacketSpec(0.0, 0.0)
    with pytest.raises(InvalidInputError):
        PacketSpec(0.0, 1.0, side="left")
    assert PacketSpec(0.0, 1.0, -3.0).centre == pytest.approx(math.exp(3))


def test_incident_packet_energy_and_position():
    spec = PacketSpec(-0.5, 2.0, -3.0)
    psi = incident_packet(spec, BIG)
    assert psi.norm_sq() == pytest.approx(1.0, abs=1e-12)
    rho = psi.density()
    x = BIG.x
    assert np.all(rho[x < 0] == 0)
    mean_log = BIG.dx * np.sum(rho[x > 0] * np.log(x[x > 0]))
    assert mean_log == pytest.approx(3.0, abs=0.05)
    ph = np.fft.fft(psi.amplitudes)
    kinetic = np.sum(BIG.k ** 2 * np.abs(ph) ** 2) / np.sum(np.abs(ph) ** 2)
    energy = kinetic - BIG.dx * np.sum(x ** 2 / 4 * rho)
    assert energy == pytest.approx(-0.5, abs=0.02)


def test_incident_packet_domain_guards():
    with pytest.raises(DomainError):
        incident_packet(PacketSpec(0.0, 2.0, -3.0), GridSpec(40.0, 2 ** 12))
    with pytest.raises(DomainError):
        incident_packet(PacketSpec(0.0, 0.5, -1.0), BIG)


def test_split_step_is_unitary_without_absorber(rng):
    g = GridSpec(20.0, 512)
    psi = np.exp(-(g.x - 3) ** 2) * np.exp(1j * g.x)
    n0 = np.sum(np.abs(psi) ** 2)
    out = SplitStep(g, 0.01).run(psi, 200)
    assert np.sum(np.abs(out) ** 2) == pytest.approx(n0, rel=1e-12)


def test_absorbing_potential_shape():
    g = GridSpec(100.0, 1024)
    gam = absorbing_potential(g, 50.0, 0.6)
    assert np.all(gam[np.abs(g.x) < 60] == 0)
    assert gam.max() <= 50.0 and gam.max() > 49.0


def test_scatter_with_absorber_conserves_and_matches_closed_form():
    res = scatter_evolve(PacketSpec(-0.5, 2.0), BIG, 10.0, 0.005, absorber=80.0)
    assert res.P_T + res.P_R == pytest.approx(1.0, abs=1e-9)
    assert res.cleared and res.norm_drift < 1e-9
    assert res.absorbed_T > 0 and res.absorbed_R > 0
    assert res.P_T == pytest.approx(res.P_T_analytic, rel=2e-3)


def test_scatter_without_absorber_hits_edge():
    with pytest.raises(DomainError):
        scatter_evolve(PacketSpec(0.0, 2.0), BIG, 6.0, 0.01)


def test_scatter_rejects_backwards_time():
    with pytest.raises(InvalidInputError):
        scatter_evolve(PacketSpec(0.0, 2.0), BIG, -4.0, 0.01)


def test_asymptotic_densities_split_mass():
    spec = PacketSpec(0.3, 2.0)
    d_r, d_t = asymptotic_densities(spec, BIG, 3.0)
    p = float(crossing_probability(0.3))
    assert BIG.dx * d_t.sum() == pytest.approx(p, rel=1e-3)
    assert BIG.dx * d_r.sum() == pytest.approx(1 - p, rel=1e-3)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.5))
def test_fit_temperature_recovers_synthetic(temp):
    e = np.linspace(-1, 1, 11)
    assert fit_temperature(e, crossing_probability(e, temp)) == pytest.approx(temp, rel=1e-6)


def test_fit_temperature_with_width():
    e = np.linspace(-2, 2, 9)
    p = np.array([averaged_crossing(v, 0.5, 0.2) for v in e])
    assert fit_temperature(e, p, width=0.5) == pytest.approx(0.2, rel=1e-6)
    # ignoring the width biases the temperature upward
    assert fit_temperature(e, p) > 0.2
    with pytest.raises(InvalidInputError):
        fit_temperature([0.0], [0.5])


def test_preparation_fidelity_monotone():
    spec = PacketSpec(0.0, 2.0, -1.0)
    fid, pops, leaked = preparation_fidelity(spec, [10, 50, 200], GridSpec(60.0, 2 ** 14))
    assert np.all(np.diff(fid) >= 0) and fid[-1] <= 1 + 1e-12
    assert pops.sum() + leaked == pytest.approx(1.0, abs=1e-9)


@pytest.mark.slow
def test_spectrum_step_convergence():
    # halving dt moves the narrow-packet sweep by far less than 1e-4
    e = np.linspace(-2, 2, 9)
    coarse, fine = transmission_spectrum(dt=0.005), transmission_spectrum(dt=0.0025)
    a = np.array([coarse.packet_transmission(v, 0.25) for v in e])
    b = np.array([fine.packet_transmission(v, 0.25) for v in e])
    assert np.max(np.abs(a - b)) < 1e-4
