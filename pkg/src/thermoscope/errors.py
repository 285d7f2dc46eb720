"""Exception types shared across the toolkit."""


class ThermoscopeError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ThermoscopeError):
    """A domain object violates one of its invariants."""


class ParseError(ThermoscopeError):
    """An annotation source could not be parsed."""


class DimensionError(ThermoscopeError):
    """Array shapes are incompatible with the requested operation."""


class ConfigError(ThermoscopeError):
    """A run configuration is invalid. CLI exits with status 2 on these."""


class ExternalBackendError(ThermoscopeError):
    """A detector configuration needs an externally supplied implementation."""


class StateError(ThermoscopeError):
    """An operation ran before its required state was set up."""


class NumericError(ThermoscopeError):
    """A computation produced non-finite values."""
