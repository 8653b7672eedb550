import math

import pytest
from hypothesis import given, strategies as st

from ihosim import BE9_MASS, ConfigError, DerivedParams
from ihosim.units import HBAR, K_B


def test_reference_trap_numbers():
    p = DerivedParams.from_frequency(10e6, 0.01)
    assert p.lambda_L == pytest.approx(0.5 * 0.01 * 2 * math.pi * 10e6)
    assert p.x0 == pytest.approx(math.sqrt(HBAR / (2 * BE9_MASS * 2 * math.pi * 10e6)))
    assert p.x0 == pytest.approx(7.49e-9, rel=1e-2)
    assert p.hawking_temperature == pytest.approx(HBAR * p.lambda_L / (2 * math.pi * K_B))


def test_length_scale_from_effective_oscillator():
    p = DerivedParams.from_frequency(2e6, 0.05)
    # the inverted oscillator's own length scale reduces to the trap's
    assert math.sqrt(HBAR / (2 * p.m_eff * p.lambda_L)) == pytest.approx(p.x0)
    assert p.alpha == pytest.approx(p.m_eff * p.lambda_L ** 2)


# energies in joules are ~1e-29, so keep v clear of the subnormal range
@given(st.floats(1e3, 1e8), st.floats(1e-4, 0.5),
       st.floats(-1e3, 1e3).filter(lambda v: v == 0 or abs(v) > 1e-200))
def test_conversions_round_trip(f0, xi, v):
    p = DerivedParams.from_frequency(f0, xi)
    assert p.to_dimless_time(p.to_si_time(v)) == pytest.approx(v, rel=1e-12)
    assert p.to_dimless_length(p.to_si_length(v)) == pytest.approx(v, rel=1e-12)
    assert p.to_dimless_energy(p.to_si_energy(v)) == pytest.approx(v, rel=1e-12)


@pytest.mark.parametrize("kw", [dict(omega0=0, xi=0.1), dict(omega0=1.0, xi=0.0),
                                dict(omega0=1.0, xi=0.1, mass=-1)])
def test_rejects_bad_parameters(kw):
    with pytest.raises(ConfigError):
        DerivedParams(**kw)
