"""Exception hierarchy shared across the package."""


class AnisqgError(Exception):
    """Base class for all package errors."""


class InvalidParameters(AnisqgError, ValueError):
    pass


class PreconditionViolated(AnisqgError, ValueError):
    pass


class SingularSymbol(AnisqgError, ValueError):
    pass


class EmptyBand(AnisqgError, ValueError):
    pass


class NonFinite(AnisqgError, FloatingPointError):
    """Raised when the solver state stops being finite.

    ``time`` holds the simulation time of the failing step.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class QuadratureNoConvergence(AnisqgError, RuntimeError):
    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class DegenerateSystem(AnisqgError, ValueError):
    pass


class ZeroField(AnisqgError, ValueError):
    pass


class HypothesisViolated(AnisqgError, ValueError):
    pass


class InsufficientSamples(AnisqgError, ValueError):
    pass


class NonPositiveValue(AnisqgError, ValueError):
    pass


class ConfigError(AnisqgError, ValueError):
    """Config parse or validation failure; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
