"""Time-of-flight (dispersive Fourier transform) spectrometer model.

A large dispersion maps wavelength linearly to arrival time, ``t = D (lambda - lambda0)``;
the arrival histogram is blurred by Gaussian detector jitter and relabelled back
to wavelength.  Only intensity is detected, so the fibre's own spectral phase is
not applied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError
from .sigspace import FWHM_PER_SIGMA, SPEED_OF_LIGHT, SpectralAmplitude

GAUSS_FWHM = math.sqrt(2.0) * FWHM_PER_SIGMA  # FWHM / standard deviation

# reference instrument: 19.8 km SMF-28, 336.6 ps/nm, 11 ps RMS jitter, 0.22 nm quoted resolution
REFERENCE_DISPERSION = 336.6e-12 / 1e-9
REFERENCE_JITTER = 11e-12
REFERENCE_BIN = 1e-12
REFERENCE_RESOLUTION = 0.22e-9


def _bare_resolution(dispersion: float, jitter_rms: float, bin_width: float, factor: float) -> float:
    jitter_term = factor * GAUSS_FWHM * jitter_rms / abs(dispersion)
    bin_term = bin_width / abs(dispersion)
    return math.hypot(jitter_term, bin_term)


def calibrate_instrument_factor(dispersion: float = REFERENCE_DISPERSION,
                                jitter_rms: float = REFERENCE_JITTER,
                                bin_width: float = REFERENCE_BIN,
                                resolution: float = REFERENCE_RESOLUTION) -> float:
    """Multiplier on the jitter-limited width that reproduces a quoted resolution."""
    bin_term = bin_width / abs(dispersion)
    if resolution <= bin_term:
        raise ConfigurationError("quoted resolution is below the histogram bin limit")
    jitter_term = GAUSS_FWHM * jitter_rms / abs(dispersion)
    return math.sqrt(resolution**2 - bin_term**2) / jitter_term


DEFAULT_INSTRUMENT_FACTOR = calibrate_instrument_factor()


@dataclass(frozen=True)
class DftConfig:
    """``dispersion`` in s/m, ``jitter_rms`` and ``bin_width`` in s."""

    dispersion: float = REFERENCE_DISPERSION
    jitter_rms: float = REFERENCE_JITTER
    bin_width: float = REFERENCE_BIN
    instrument_factor: float = DEFAULT_INSTRUMENT_FACTOR

    def __post_init__(self):
        if self.dispersion == 0 or not math.isfinite(self.dispersion):
            raise ConfigurationError("DFT dispersion must be finite and non-zero")
        if self.jitter_rms < 0:
            raise ConfigurationError("jitter_rms must be >= 0")
        if not self.bin_width > 0:
            raise ConfigurationError("bin_width must be positive")
        if not self.instrument_factor > 0:
            raise ConfigurationError("instrument_factor must be positive")


def nominal_resolution(cfg: DftConfig) -> float:
    """Spectral resolution (m): scaled jitter width and bin width added in quadrature."""
    return _bare_resolution(cfg.dispersion, cfg.jitter_rms, cfg.bin_width, cfg.instrument_factor)


class DftSpectrum(NamedTuple):
    wavelength: np.ndarray      # m, absolute
    intensity: np.ndarray       # unit area over wavelength in m
    arrival_time: np.ndarray    # s, relative to lambda0
    undersampled: bool


def _significant_time_samples(a: SpectralAmplitude):
    at = a.to_time()
    inten = at.intensity()
    idx = np.flatnonzero(inten > 1e-20 * inten.max())
    return at, idx[0], idx[-1] + 1


def spectral_density_direct(a: SpectralAmplitude, wavelength) -> np.ndarray:
    """``|a(Omega(lambda))|^2 |dOmega/dlambda|`` by direct trigonometric interpolation.

    Exact for the band-limited field but O(samples x points); used as a reference.
    """
    at, i0, i1 = _significant_time_samples(a)
    g = a.grid
    omega = 2.0 * math.pi * SPEED_OF_LIGHT / np.asarray(wavelength, dtype=float) - g.carrier
    t = g.t[i0:i1]
    e = at.values[i0:i1] * g.time_step / math.sqrt(2.0 * math.pi)
    flat = omega.ravel()
    res = np.empty(flat.size)
    chunk = max(1, 2_000_000 // max(t.size, 1))
    for i in range(0, flat.size, chunk):
        res[i:i + chunk] = np.abs(np.exp(1j * np.outer(flat[i:i + chunk], t)) @ e) ** 2
    jac = 2.0 * math.pi * SPEED_OF_LIGHT / np.asarray(wavelength, dtype=float) ** 2
    return res.reshape(omega.shape) * jac


def spectral_density(a: SpectralAmplitude, wavelength, oversample: int = 16) -> np.ndarray:
    """``|a(Omega(lambda))|^2 |dOmega/dlambda|`` at arbitrary wavelengths.

    The significant part of the time-domain field is zero-padded ``oversample``-fold,
    transformed onto a fine frequency grid and the intensity is spline-interpolated.
    """
    from scipy.interpolate import CubicSpline

    at, i0, i1 = _significant_time_samples(a)
    g = a.grid
    dt = g.time_step
    n = i1 - i0
    size = 1 << max(10, int(math.ceil(math.log2(oversample * n))))
    # sum_j e_j exp(i Omega_k j dt) on Omega_k = 2 pi k / (size dt)
    spec = np.fft.fftshift(np.fft.ifft(at.values[i0:i1], size)) * size * dt / math.sqrt(2.0 * math.pi)
    fine = (np.arange(size) - size // 2) * (2.0 * math.pi / (size * dt))
    inten = np.abs(spec) ** 2
    omega = 2.0 * math.pi * SPEED_OF_LIGHT / np.asarray(wavelength, dtype=float) - g.carrier
    lo = max(int(np.searchsorted(fine, omega.min())) - 4, 0)
    hi = min(int(np.searchsorted(fine, omega.max())) + 4, size)
    spline = CubicSpline(fine[lo:hi], inten[lo:hi])
    out = np.clip(spline(omega), 0.0, None)
    out[(omega < fine[0]) | (omega > fine[-1])] = 0.0
    jac = 2.0 * math.pi * SPEED_OF_LIGHT / np.asarray(wavelength, dtype=float) ** 2
    return out * jac


def simulate_dft_spectrum(a: SpectralAmplitude, cfg: DftConfig, span: float | None = None) -> DftSpectrum:
    """Jitter-blurred time-of-flight spectrum of ``a``.

    ``span`` is the wavelength window (m) centred on the carrier; by default it
    covers the significant spectrum plus eight jitter widths on either side.
    """
    af = a.to_frequency()
    g = af.grid
    lam0 = g.center_wavelength
    d = cfg.dispersion
    inten = af.intensity()
    sig = inten > 1e-12 * inten.max()
    wl = g.wavelength[sig]
    blur = cfg.jitter_rms / abs(d)
    if span is None:
        half = max(abs(wl.max() - lam0), abs(wl.min() - lam0)) + 8.0 * blur
    else:
        half = span / 2.0
    t_half = abs(d) * half
    n_bins = int(math.ceil(t_half / cfg.bin_width))
    times = cfg.bin_width * np.arange(-n_bins, n_bins + 1)
    lam = lam0 + times / d
    density = spectral_density(af, lam)  # per unit wavelength
    hist = density * cfg.bin_width / abs(d)
    if cfg.jitter_rms > 0:
        k_half = int(math.ceil(6.0 * cfg.jitter_rms / cfg.bin_width))
        kt = cfg.bin_width * np.arange(-k_half, k_half + 1)
        with np.errstate(over="ignore"):  # sub-bin jitter collapses to a delta kernel
            kernel = np.exp(-0.5 * (kt / cfg.jitter_rms) ** 2)
        kernel /= kernel.sum()
        hist = np.convolve(hist, kernel, mode="same")
    order = np.argsort(lam)
    lam, hist, times = lam[order], hist[order], times[order]
    dl = cfg.bin_width / abs(d)
    area = hist.sum() * dl
    if not area > 0:
        raise ConfigurationError("spectrum has no energy inside the DFT window")
    return DftSpectrum(lam, hist / area, times, cfg.bin_width > cfg.jitter_rms / 2.0)


def spectrum_on_wavelength(a: SpectralAmplitude, wavelength) -> np.ndarray:
    """Unit-area spectral density of ``a`` on a uniform wavelength axis (no blur)."""
    wavelength = np.asarray(wavelength, dtype=float)
    dens = spectral_density(a, wavelength)
    dl = abs(wavelength[1] - wavelength[0])
    return dens / (dens.sum() * dl)
