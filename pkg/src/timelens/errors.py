"""Exception types shared across the package."""


class TimelensError(Exception):
    """Base class for all errors raised by timelens."""


class ConfigurationError(TimelensError, ValueError):
    """Invalid parameters, units or configuration keys."""


class AliasingError(TimelensError):
    """A waveform no longer fits inside the sampling window or Nyquist band."""

    def __init__(self, message, required_span=None):
        super().__init__(message)
        self.required_span = required_span


class UnsupportedError(TimelensError):
    """Requested regime is outside what the models cover."""


class FitError(TimelensError):
    """Non-linear least-squares fit failed to converge."""

    def __init__(self, message, last_params=None, residual_norm=None):
        super().__init__(message)
        self.last_params = last_params
        self.residual_norm = residual_norm


class OptimizationError(TimelensError):
    """The parameter search produced no valid evaluation."""
