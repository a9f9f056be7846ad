"""Exception hierarchy shared across the package."""


class RfcurvesError(Exception):
    """Base class for all package errors."""


class DomainError(RfcurvesError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(RfcurvesError, ValueError):
    """An operation was called with an unsupported combination of inputs."""


class StateError(RfcurvesError, RuntimeError):
    """The solver state left the feasible region."""


class NumericalError(RfcurvesError, RuntimeError):
    """A numerical routine failed to reach its accuracy contract."""


class ConfigError(RfcurvesError, ValueError):
    """An experiment configuration failed validation."""
