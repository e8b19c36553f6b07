"""Exception types shared across the package."""


class SkynomaError(Exception):
    """Base class for package errors."""


class ConfigError(SkynomaError, ValueError):
    """A configuration key is unknown, malformed, or out of its valid range."""


class DomainError(SkynomaError, ValueError):
    """A numeric argument lies outside the mathematical domain of an operation."""


class SizeGuardError(SkynomaError, ValueError):
    """A combinatorial routine was asked to run beyond its guarded problem size."""
