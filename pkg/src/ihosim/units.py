"""Dimensionless units and physical-parameter conversions.

Lengths are measured in x0 = sqrt(hbar / (2 M omega0)), times in 1/lambda_L
and energies in hbar*lambda_L.  In these units the inverted oscillator reads
H = p_g**2 - x**2/4 with p_g = -i d/dx, and the instability rate is 1.
"""
import math
from dataclasses import dataclass

from scipy import constants as sc

from .errors import ConfigError

HBAR = sc.hbar
K_B = sc.k
AMU = sc.atomic_mass
BE9_MASS = 9.012182 * AMU


@dataclass(frozen=True)
class DerivedParams:
    """Parameters of an ion in a trap whose curvature is modulated by xi.

    ``omega0`` is angular (rad/s).  Within the rotating-wave approximation the
    ion behaves as an inverted oscillator with effective mass ``m_eff`` and
    curvature ``alpha`` whose growth rate is lambda_L = xi*omega0/2.
    """

    omega0: float
    xi: float
    mass: float = BE9_MASS

    def __post_init__(self):
        if not (self.omega0 > 0 and math.isfinite(self.omega0)):
            raise ConfigError(f"omega0 must be positive, got {self.omega0}")
        if not (self.xi > 0 and math.isfinite(self.xi)):
            raise ConfigError(f"xi must be positive, got {self.xi}")
        if not self.mass > 0:
            raise ConfigError(f"mass must be positive, got {self.mass}")

    @classmethod
    def from_frequency(cls, f0_hz, xi, mass=BE9_MASS):
        return cls(2.0 * math.pi * f0_hz, xi, mass)

    @property
    def lambda_L(self):
        return 0.5 * self.xi * self.omega0

    @property
    def m_eff(self):
        return 2.0 * self.mass / self.xi

    @property
    def alpha(self):
        return 0.25 * self.m_eff * self.omega0 ** 2 * self.xi ** 2

    @property
    def x0(self):
        # sqrt(hbar/(2 m_eff lambda_L)) == sqrt(hbar/(2 M omega0)), independent of xi
        return math.sqrt(HBAR / (2.0 * self.mass * self.omega0))

    @property
    def t_unit(self):
        return 1.0 / self.lambda_L

    @property
    def energy_unit(self):
        return HBAR * self.lambda_L

    @property
    def hawking_temperature(self):
        """T_H = hbar lambda_L / (2 pi k_B) in kelvin."""
        return self.energy_unit / (2.0 * math.pi * K_B)

    def to_dimless_time(self, t_seconds):
        return t_seconds * self.lambda_L

    def to_si_time(self, t_dimless):
        return t_dimless / self.lambda_L

    def to_dimless_length(self, x_m):
        return x_m / self.x0

    def to_si_length(self, x_dimless):
        return x_dimless * self.x0

    def to_dimless_energy(self, e_joule):
        return e_joule / self.energy_unit

    def to_si_energy(self, e_dimless):
        return e_dimless * self.energy_unit
