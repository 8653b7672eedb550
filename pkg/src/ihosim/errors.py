"""Exception and warning types shared across the package.

Every error carries an ``exit_code`` so the command-line front end can map a
failure to its category without inspecting messages.
"""


class IHOError(Exception):
    exit_code = 1


class ConfigError(IHOError, ValueError):
    """Invalid configuration value, unknown key, or missing required key."""

    exit_code = 2


class InvalidInputError(IHOError, ValueError):
    exit_code = 2


class NumericalGuardError(IHOError, RuntimeError):
    """A numerical guard tripped (truncation, coverage, domain, step size)."""

    exit_code = 3


class TruncationError(NumericalGuardError):
    pass


class CoverageError(NumericalGuardError):
    pass


class DomainError(NumericalGuardError):
    pass


class StepSizeError(NumericalGuardError):
    pass


class BandwidthError(NumericalGuardError):
    pass


class TruncationWarning(UserWarning):
    pass
