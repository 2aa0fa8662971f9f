"""Time-lens spectral bandwidth conversion and Hong-Ou-Mandel interference simulator."""

__version__ = "0.1.0"

from .errors import (AliasingError, ConfigurationError, FitError, OptimizationError, TimelensError,
                     UnsupportedError)
from .sigspace import Grid, SpectralAmplitude, gaussian_spectral_amplitude, make_grid
from .elements import (GDD, Attenuator, Delay, GaussianFilter, QuadraticTimePhase, SinusoidalTimePhase,
                       collimation_design, run_pipeline)
from .hom import HomScan, DipFit, coincidence_probability, dip_scan, fit_gaussian_dip

__all__ = [
    "__version__", "AliasingError", "ConfigurationError", "FitError", "OptimizationError", "TimelensError",
    "UnsupportedError", "Grid", "SpectralAmplitude", "gaussian_spectral_amplitude", "make_grid", "GDD",
    "Attenuator", "Delay", "GaussianFilter", "QuadraticTimePhase", "SinusoidalTimePhase",
    "collimation_design", "run_pipeline", "HomScan", "DipFit", "coincidence_probability", "dip_scan",
    "fit_gaussian_dip",
]
