"""Horizon-side formulas in geometric units (G = c = hbar = k_B = 1)."""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class MetricDerivatives:
    """f'(r0) and g'(r0) for a metric -f dt^2 + dr^2/g + ... at a horizon r0."""

    fprime: float
    gprime: float
    r0: Optional[float] = None

    def __post_init__(self):
        if not (self.fprime > 0 and self.gprime > 0):
            raise InvalidInputError(
                f"horizon derivatives must be positive, got f'={self.fprime}, g'={self.gprime}")

    @classmethod
    def schwarzschild(cls, r0):
        """f = g = 1 - r0/r, so f'(r0) = g'(r0) = 1/r0."""
        if not r0 > 0:
            raise InvalidInputError(f"horizon radius must be positive, got {r0}")
        return cls(1.0 / r0, 1.0 / r0, r0)


def surface_gravity(md):
    return 0.5 * math.sqrt(md.fprime * md.gprime)


def hawking_temperature(md):
    return math.sqrt(md.fprime * md.gprime) / (4.0 * math.pi)


def tunneling_rate(eps, temperature):
    """Leading-order emission rate exp(-eps/T)."""
    if not temperature > 0:
        raise InvalidInputError(f"temperature must be positive, got {temperature}")
    return np.exp(-np.asarray(eps, dtype=float) / temperature)


def lyapunov_from_horizon(md):
    """The growth rate matched to the horizon: lambda_L = kappa."""
    return surface_gravity(md)
