"""Trapped-ion inverted-oscillator simulator: OTOCs, barrier scattering, squeezing, readout."""
from ._kernels import backend
from .dynamics import (HamiltonianSpec, Propagator, build_hamiltonian, converge_dim, fidelity,
                       propagate_exact, propagate_stepped, squeeze_propagator_oracle,
                       to_rotating_frame)
from .duality import (MetricDerivatives, hawking_temperature, surface_gravity, tunneling_rate)
from .errors import (BandwidthError, ConfigError, CoverageError, DomainError, IHOError,
                     InvalidInputError, NumericalGuardError, StepSizeError, TruncationError,
                     TruncationWarning)
from .measurement import (PhononDistribution, ReadoutSignal, radiation_report,
                          readout_signal, reconstruct_density, squeezed_vacuum_populations,
                          thermal_populations)
from .operators import (FockSpace, GridSpec, OperatorMatrix, StateVector, fock_state,
                        fock_superposition, fock_to_grid, grid_to_fock, ladder, quadratures)
from .otoc import (LyapunovFit, OtocCurve, driven_otoc, fit_lyapunov, mss_check,
                   otoc_commutator, otoc_pure_state)
from .scattering import (PacketSpec, ScatterResult, asymptotic_densities, crossing_probability, eq8_densities,
                         fit_temperature, incident_packet, preparation_fidelity, scatter_evolve,
                         smatrix, transmission_reflection, transmission_spectrum)
from .units import BE9_MASS, DerivedParams

__version__ = "0.1.0"
