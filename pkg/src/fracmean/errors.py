"""Exception types shared across the package."""


class FracmeanError(Exception):
    """Base class for all package errors."""


class ParameterError(FracmeanError, ValueError):
    """An argument is outside the range an operation accepts."""


class DomainError(FracmeanError, KeyError):
    """A point or index does not belong to the space it is used with."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown point"


class UnsupportedModelError(FracmeanError, TypeError):
    """The operation needs a model feature (e.g. a grid layout) the space lacks."""


class CertificationError(FracmeanError):
    """A construction could not satisfy one of its certified invariants.

    ``details`` carries a structured description of the violation, for
    example the offending cube ``(k, j)``.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class ConfigError(FracmeanError, ValueError):
    """A run configuration is malformed or references unknown generators."""
