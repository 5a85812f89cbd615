"""Exception hierarchy shared across the package."""


class EepannError(Exception):
    """Base class for all package errors."""


class InvalidDeformation(EepannError):
    """Deformation gradient with non-positive determinant."""


class ConfigError(EepannError):
    """Invalid configuration, dimensions, or parameter values."""


class ParseError(EepannError):
    """Malformed input file.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class HomogenizationFailure(EepannError):
    """Inner laminate minimization did not converge."""

    def __init__(self, message, residual_norm=None):
        super().__init__(message)
        self.residual_norm = residual_norm


class LegendreFailure(EepannError):
    """Electric displacement solve for a prescribed field did not converge."""

    def __init__(self, message, residual_norm=None, singular=False):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.singular = singular


class StabilityError(EepannError):
    """Acoustic tensor assembly failed (singular dielectric block)."""


class NewtonFailure(EepannError):
    """Global Newton solve did not converge.

    ``history`` holds the residual infinity norms of all iterations.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class StepFailure(EepannError):
    """Load stepping stalled below the minimum step size."""

    def __init__(self, message, last_lambda=None):
        super().__init__(message)
        self.last_lambda = last_lambda


class PathFailure(EepannError):
    """Equilibrium-path continuation stalled below the minimum step size."""

    def __init__(self, message, last_e0=None):
        super().__init__(message)
        self.last_e0 = last_e0
