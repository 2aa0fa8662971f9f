"""Optical elements acting on single-photon envelopes and the time-lens design rules.

Sign conventions: ``GDD(phi)`` multiplies the spectrum by ``exp(+i phi/2 Omega^2)``
and ``QuadraticTimePhase(K)`` the time envelope by ``exp(+i K/2 t^2)``.  With the
``exp(-i Omega t)`` synthesis kernel used in :mod:`timelens.sigspace` a positive
GDD followed by a positive chirp rate ``K = 1/phi`` compresses the spectrum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import sigspace
from .errors import ConfigurationError, TimelensError, UnsupportedError
from .sigspace import FREQUENCY, TIME, Grid, SpectralAmplitude

# fraction of the Nyquist band a time phase may push the spectrum into
_NYQUIST_MARGIN = 0.95


def _require_in_time_window(a: SpectralAmplitude, what: str) -> None:
    sigspace.check_fits_window(a, what)


def _guard_time_phase(a: SpectralAmplitude, slope, what: str) -> None:
    """Check that spectral extent plus the largest local frequency shift stays sub-Nyquist.

    ``slope(t)`` is the derivative of the applied temporal phase.
    """
    at = a.to_time()
    inten = at.intensity()
    peak = inten.max()
    if peak == 0:
        return
    t_sig = at.grid.t[inten > sigspace.SIGNIFICANCE * peak]
    shift = float(np.max(np.abs(slope(t_sig))))
    lo, hi = sigspace.significant_extent(a.to_frequency())
    reach = max(abs(lo), abs(hi)) + shift
    nyq = a.grid.nyquist
    if reach > _NYQUIST_MARGIN * nyq:
        raise sigspace.AliasingError(
            f"{what}: instantaneous frequency excursion {reach:.4g} rad/s exceeds the Nyquist "
            f"band {nyq:.4g} rad/s; reduce the time step below {math.pi * _NYQUIST_MARGIN / reach:.4g} s")


def apply_gdd(a: SpectralAmplitude, gdd: float) -> SpectralAmplitude:
    """Quadratic spectral phase ``exp(i gdd/2 Omega^2)``."""
    af = a.to_frequency()
    if gdd == 0:
        return af
    w = af.grid.omega
    out = af.with_values(af.values * np.exp(0.5j * gdd * w * w))
    _require_in_time_window(out.to_time(), f"pulse after GDD {gdd:.4g} s^2")
    return out


def apply_quadratic_time_phase(a: SpectralAmplitude, chirp_rate: float) -> SpectralAmplitude:
    """Ideal time lens ``exp(i K/2 t^2)``."""
    at = a.to_time()
    if chirp_rate == 0:
        return at
    _guard_time_phase(at, lambda t: chirp_rate * t, f"time lens K={chirp_rate:.4g} s^-2")
    t = at.grid.t
    return at.with_values(at.values * np.exp(0.5j * chirp_rate * t * t))


def sinusoidal_phase(t, amplitude: float, frequency: float, offset: float = 0.0):
    """Electro-optic modulator phase ``-A cos(2 pi f_m (t - t0))``."""
    return -amplitude * np.cos(2.0 * math.pi * frequency * (np.asarray(t) - offset))


def apply_sinusoidal_time_phase(a: SpectralAmplitude, amplitude: float, frequency: float,
                                offset: float = 0.0) -> SpectralAmplitude:
    """Sinusoidal time lens; ``offset`` places the cosine trough relative to ``t = 0``."""
    at = a.to_time()
    if amplitude == 0:
        return at
    if not frequency > 0:
        raise ConfigurationError(f"modulation frequency must be positive, got {frequency!r}")
    wm = 2.0 * math.pi * frequency
    _guard_time_phase(at, lambda t: amplitude * wm * np.sin(wm * (t - offset)),
                      f"sinusoidal lens A={amplitude:.4g} rad, f_m={frequency:.4g} Hz")
    theta = sinusoidal_phase(at.grid.t, amplitude, frequency, offset)
    return at.with_values(at.values * np.exp(1j * theta))


def apply_delay(a: SpectralAmplitude, delay: float) -> SpectralAmplitude:
    """Multiply the spectrum by ``exp(-i Omega tau)``; the carrier phase is dropped."""
    af = a.to_frequency()
    if delay == 0:
        return af
    return af.with_values(af.values * np.exp(-1j * af.grid.omega * delay))


def filter_transmission(omega, fwhm: float, center_offset: float = 0.0, peak_transmission: float = 1.0):
    """Intensity transmission ``peak * exp(-4 ln2 (Omega-c)^2 / fwhm^2)``."""
    if math.isinf(fwhm):
        return np.full(np.shape(omega), float(peak_transmission))
    x = (np.asarray(omega) - center_offset) / fwhm
    return peak_transmission * np.exp(-4.0 * math.log(2.0) * x * x)


def _check_transmission(value: float, name: str) -> None:
    if not (0.0 < value <= 1.0):
        raise ConfigurationError(f"{name} must lie in (0, 1], got {value!r}")


def apply_filter(a: SpectralAmplitude, fwhm: float, center_offset: float = 0.0,
                 peak_transmission: float = 1.0) -> SpectralAmplitude:
    """Gaussian band-pass; ``fwhm`` is the FWHM of the intensity transmission."""
    _check_transmission(peak_transmission, "peak_transmission")
    if not fwhm > 0:
        raise ConfigurationError(f"filter fwhm must be positive, got {fwhm!r}")
    af = a.to_frequency()
    mask = np.sqrt(filter_transmission(af.grid.omega, fwhm, center_offset, peak_transmission))
    return af.with_values(af.values * mask)


def apply_attenuator(a: SpectralAmplitude, transmission: float) -> SpectralAmplitude:
    _check_transmission(transmission, "attenuator transmission")
    return a.with_values(a.values * math.sqrt(transmission))


@dataclass(frozen=True)
class GDD:
    gdd: float

    def apply(self, a):
        return apply_gdd(a, self.gdd)


@dataclass(frozen=True)
class QuadraticTimePhase:
    chirp_rate: float

    def apply(self, a):
        return apply_quadratic_time_phase(a, self.chirp_rate)


@dataclass(frozen=True)
class SinusoidalTimePhase:
    amplitude: float
    frequency: float
    offset: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigurationError(f"modulation amplitude must be >= 0, got {self.amplitude!r}")
        if not self.frequency > 0:
            raise ConfigurationError(f"modulation frequency must be positive, got {self.frequency!r}")

    @property
    def chirp_rate(self) -> float:
        """Curvature of the phase at the trough, ``A (2 pi f_m)^2``."""
        return self.amplitude * (2.0 * math.pi * self.frequency) ** 2

    def apply(self, a):
        return apply_sinusoidal_time_phase(a, self.amplitude, self.frequency, self.offset)


@dataclass(frozen=True)
class Delay:
    delay: float

    def apply(self, a):
        return apply_delay(a, self.delay)


@dataclass(frozen=True)
class GaussianFilter:
    fwhm: float
    center_offset: float = 0.0
    peak_transmission: float = 1.0

    def __post_init__(self):
        _check_transmission(self.peak_transmission, "peak_transmission")
        if not self.fwhm > 0:
            raise ConfigurationError(f"filter fwhm must be positive, got {self.fwhm!r}")

    def transmission(self, omega):
        return filter_transmission(omega, self.fwhm, self.center_offset, self.peak_transmission)

    def apply(self, a):
        return apply_filter(a, self.fwhm, self.center_offset, self.peak_transmission)


@dataclass(frozen=True)
class Attenuator:
    transmission: float

    def __post_init__(self):
        _check_transmission(self.transmission, "attenuator transmission")

    def apply(self, a):
        return apply_attenuator(a, self.transmission)


OpticalElement = GDD | QuadraticTimePhase | SinusoidalTimePhase | Delay | GaussianFilter | Attenuator

PHASE_ONLY = (GDD, QuadraticTimePhase, SinusoidalTimePhase, Delay)


def run_pipeline(a: SpectralAmplitude, elements: Sequence[OpticalElement]):
    """Apply ``elements`` left to right.

    Returns ``(output, total_transmission)`` where the transmission is the
    product of every element's power transmission for this input.
    """
    if len(elements) == 0:
        raise ConfigurationError("pipeline must contain at least one element")
    total = 1.0
    current = a
    for index, element in enumerate(elements):
        before = current.norm2()
        try:
            current = element.apply(current)
        except TimelensError as exc:
            exc.element_index = index
            exc.args = (f"element {index} ({type(element).__name__}): {exc}",) + exc.args[1:]
            raise
        if not isinstance(element, PHASE_ONLY):
            total *= current.norm2() / before
    return current, total


@dataclass(frozen=True)
class LensDesign:
    """Collimated time-lens parameters.

    ``gdd`` in s^2, ``chirp_rate`` (K_eff) in s^-2, ``amplitude`` in rad,
    ``modulation_frequency`` in Hz, ``compression`` the bandwidth ratio.
    """

    gdd: float
    chirp_rate: float
    amplitude: float
    modulation_frequency: float
    compression: float


def collimation_design(sigma_in: float, sigma_out: float, modulation_frequency: float) -> LensDesign:
    """Dispersion and drive amplitude compressing ``sigma_in`` to ``sigma_out``."""
    if not sigma_out > 0:
        raise ConfigurationError(f"target bandwidth must be positive, got {sigma_out!r}")
    if not sigma_in > sigma_out:
        raise UnsupportedError(
            "collimation_design only covers compression (sigma_in > sigma_out); "
            "bandwidth expansion is not modelled")
    if not modulation_frequency > 0:
        raise ConfigurationError(f"modulation frequency must be positive, got {modulation_frequency!r}")
    gdd = 1.0 / (sigma_in * sigma_out)
    k = 1.0 / gdd
    amplitude = k / (2.0 * math.pi * modulation_frequency) ** 2
    return LensDesign(gdd, k, amplitude, modulation_frequency, sigma_in / sigma_out)


def ideal_converted_amplitude(sigma_in: float, sigma_out: float, grid: Grid) -> SpectralAmplitude:
    """Closed-form output of GDD ``1/(sigma_in sigma_out)`` plus a matched ideal lens.

    Gaussian magnitude of width ``sigma_out`` times the residual spectral phase
    ``exp(-i Omega^2 / (2 sigma_in sigma_out))``.  The residual phase carries the
    opposite sign of the applied GDD: GDD, lens, and a further GDD of the same
    sign would form an exact Fourier transform.
    """
    if not (sigma_in > 0 and sigma_out > 0):
        raise ConfigurationError("bandwidths must be positive")
    mag = sigspace.gaussian_spectral_amplitude(grid, sigma_out)
    w = grid.omega
    return mag.with_values(mag.values * np.exp(-1j * w * w / (2.0 * sigma_in * sigma_out)))


def ideal_converter(gdd: float) -> list[OpticalElement]:
    return [GDD(gdd), QuadraticTimePhase(1.0 / gdd)]


def sinusoidal_converter(gdd: float, amplitude: float, frequency: float, offset: float = 0.0):
    return [GDD(gdd), SinusoidalTimePhase(amplitude, frequency, offset)]


__all__ = [
    "GDD", "QuadraticTimePhase", "SinusoidalTimePhase", "Delay", "GaussianFilter", "Attenuator",
    "OpticalElement", "LensDesign", "apply_gdd", "apply_quadratic_time_phase",
    "apply_sinusoidal_time_phase", "apply_delay", "apply_filter", "apply_attenuator",
    "collimation_design", "ideal_converted_amplitude", "run_pipeline", "sinusoidal_phase",
    "filter_transmission", "ideal_converter", "sinusoidal_converter", "FREQUENCY", "TIME",
]
