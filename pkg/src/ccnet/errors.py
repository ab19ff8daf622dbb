"""Exception types shared across the package."""


class CCNetError(Exception):
    """Base class for errors raised by ccnet."""


class DimensionError(CCNetError, ValueError):
    """Array shapes or sizes disagree."""


class DomainError(CCNetError, ValueError):
    """An input lies outside the domain of a function."""


class CapacityError(CCNetError, ValueError):
    """A requested table or oracle would exceed the configured size guard."""


class ConfigError(CCNetError, ValueError):
    """A configuration value is malformed or inconsistent."""


class DivergenceError(CCNetError, RuntimeError):
    """Training blew up."""


class ModelFormatError(CCNetError, ValueError):
    """A model file could not be parsed."""


class ValidationError(ConfigError):
    """Configuration values are well-formed but violate a cross-field constraint."""
