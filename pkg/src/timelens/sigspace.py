"""Sampled baseband envelopes on conjugate time/frequency grids.

Envelopes are stored relative to the carrier ``omega0 = 2*pi*c/center_wavelength``;
the carrier oscillation itself is never sampled.  The transform pair is the
unitary one with synthesis kernel ``exp(-1j*Omega*t)``::

    E(t)     = 1/sqrt(2 pi) * integral phi(Omega) exp(-1j Omega t) dOmega
    phi(Om)  = 1/sqrt(2 pi) * integral E(t)      exp(+1j Omega t) dt

so that ``sum |phi|^2 dOmega == sum |E|^2 dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import AliasingError, ConfigurationError

SPEED_OF_LIGHT = 299_792_458.0
FWHM_PER_SIGMA = 2.0 * math.sqrt(math.log(2.0))  # intensity FWHM of exp(-x^2/(2 s^2)) amplitude

FREQUENCY = "frequency"
TIME = "time"

# relative intensity below which samples are treated as empty
SIGNIFICANCE = 1e-12


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform conjugate sampling of time and angular-frequency offsets."""

    n_samples: int
    time_span: float
    center_wavelength: float

    def __post_init__(self):
        if not isinstance(self.n_samples, (int, np.integer)) or not _is_power_of_two(int(self.n_samples)):
            raise ConfigurationError(f"n_samples must be a power of two, got {self.n_samples!r}")
        if self.n_samples < 1024:
            raise ConfigurationError(f"n_samples must be >= 1024, got {self.n_samples}")
        if not self.time_span > 0:
            raise ConfigurationError(f"time_span must be positive, got {self.time_span!r}")
        if not self.center_wavelength > 0:
            raise ConfigurationError(f"center_wavelength must be positive, got {self.center_wavelength!r}")

    @property
    def time_step(self) -> float:
        return self.time_span / self.n_samples

    @property
    def angular_frequency_step(self) -> float:
        return 2.0 * math.pi / self.time_span

    @property
    def carrier(self) -> float:
        """Carrier angular frequency omega0 in rad/s."""
        return 2.0 * math.pi * SPEED_OF_LIGHT / self.center_wavelength

    @property
    def nyquist(self) -> float:
        """Largest representable |Omega| (rad/s)."""
        return math.pi / self.time_step

    @cached_property
    def t(self) -> np.ndarray:
        t = (np.arange(self.n_samples) - self.n_samples // 2) * self.time_step
        t.flags.writeable = False
        return t

    @cached_property
    def omega(self) -> np.ndarray:
        w = (np.arange(self.n_samples) - self.n_samples // 2) * self.angular_frequency_step
        w.flags.writeable = False
        return w

    @cached_property
    def wavelength(self) -> np.ndarray:
        """Absolute wavelength (m) of every frequency sample."""
        wl = 2.0 * math.pi * SPEED_OF_LIGHT / (self.carrier + self.omega)
        wl.flags.writeable = False
        return wl


def make_grid(n_samples: int, time_span: float, center_wavelength: float) -> Grid:
    return Grid(int(n_samples), float(time_span), float(center_wavelength))


def default_time_span(gdd: float, input_fwhm: float) -> float:
    """Window length for a photon of angular intensity FWHM ``input_fwhm`` after ``gdd``.

    Sixteen times the stretched duration estimate ``|gdd|*fwhm`` plus the
    transform-limited duration.
    """
    tl = transform_limited_duration(input_fwhm)
    return 16.0 * (abs(gdd) * input_fwhm + tl)


def transform_limited_duration(angular_fwhm: float) -> float:
    """Intensity FWHM duration of a transform-limited Gaussian (dt*dnu = 2 ln2/pi)."""
    dnu = angular_fwhm / (2.0 * math.pi)
    return 2.0 * math.log(2.0) / math.pi / dnu


@dataclass(frozen=True, eq=False)
class SpectralAmplitude:
    """Complex envelope sampled on ``grid`` in either domain."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    domain: str = FREQUENCY

    def __post_init__(self):
        if self.domain not in (FREQUENCY, TIME):
            raise ConfigurationError(f"unknown domain {self.domain!r}")
        v = np.array(self.values, dtype=np.complex128)
        if v.shape != (self.grid.n_samples,):
            raise ConfigurationError(
                f"values must have shape ({self.grid.n_samples},), got {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def axis(self) -> np.ndarray:
        return self.grid.omega if self.domain == FREQUENCY else self.grid.t

    @property
    def step(self) -> float:
        return self.grid.angular_frequency_step if self.domain == FREQUENCY else self.grid.time_step

    def norm2(self) -> float:
        """Squared L2 norm in the current domain."""
        return float(np.sum(np.abs(self.values) ** 2) * self.step)

    def normalized(self) -> "SpectralAmplitude":
        n2 = self.norm2()
        if n2 <= 0:
            raise ConfigurationError("cannot normalize an all-zero amplitude")
        return self.with_values(self.values / math.sqrt(n2))

    def with_values(self, values, domain=None) -> "SpectralAmplitude":
        return SpectralAmplitude(self.grid, values, self.domain if domain is None else domain)

    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    @cached_property
    def transformed(self) -> "SpectralAmplitude":
        """This envelope in the other domain, computed once per instance."""
        other = transform_domain(self)
        other.__dict__["transformed"] = self
        return other

    def to_time(self) -> "SpectralAmplitude":
        return self if self.domain == TIME else self.transformed

    def to_frequency(self) -> "SpectralAmplitude":
        return self if self.domain == FREQUENCY else self.transformed


def transform_domain(a: SpectralAmplitude) -> SpectralAmplitude:
    """Return ``a`` in the other domain; unitary, so the L2 norm is unchanged."""
    g = a.grid
    if a.domain == FREQUENCY:
        scale = g.angular_frequency_step / math.sqrt(2.0 * math.pi)
        out = scale * np.fft.fftshift(np.fft.fft(np.fft.ifftshift(a.values)))
        return SpectralAmplitude(g, out, TIME)
    scale = g.time_step * g.n_samples / math.sqrt(2.0 * math.pi)
    out = scale * np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(a.values)))
    return SpectralAmplitude(g, out, FREQUENCY)


def gaussian_spectral_amplitude(grid: Grid, sigma: float, center_offset: float = 0.0) -> SpectralAmplitude:
    """Unit-norm Gaussian ``(pi s^2)^(-1/4) exp(-(Omega-c)^2/(2 s^2))``."""
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma!r}")
    reach = abs(center_offset) + 6.0 * sigma
    if reach > grid.nyquist:
        raise AliasingError(
            f"Gaussian support +-6 sigma ({reach:.4g} rad/s) exceeds the Nyquist band "
            f"({grid.nyquist:.4g} rad/s); need time_step <= {math.pi / reach:.4g} s, i.e. "
            f"n_samples >= {math.ceil(reach * grid.time_span / math.pi)} for time_span "
            f"{grid.time_span:.4g} s")
    w = grid.omega
    values = (math.pi * sigma**2) ** -0.25 * np.exp(-((w - center_offset) ** 2) / (2.0 * sigma**2))
    return SpectralAmplitude(grid, values, FREQUENCY).normalized()


def significant_extent(a: SpectralAmplitude, threshold: float = SIGNIFICANCE) -> tuple[float, float]:
    """Smallest and largest axis value where intensity exceeds ``threshold`` x peak."""
    inten = a.intensity()
    peak = inten.max()
    if peak == 0:
        return 0.0, 0.0
    idx = np.flatnonzero(inten > threshold * peak)
    ax = a.axis
    return float(ax[idx[0]]), float(ax[idx[-1]])


def check_fits_window(a: SpectralAmplitude, what: str = "waveform", margin: float = 0.95) -> None:
    """Raise AliasingError if the significant support reaches the window edge."""
    lo, hi = significant_extent(a)
    half = a.step * a.grid.n_samples / 2.0
    reach = max(abs(lo), abs(hi))
    if reach > margin * half:
        if a.domain == TIME:
            required = 2.0 * reach / margin
            raise AliasingError(
                f"{what} extends to {reach:.4g} s but the window half-span is {half:.4g} s; "
                f"time_span must be at least {required:.4g} s", required_span=required)
        raise AliasingError(
            f"{what} reaches {reach:.4g} rad/s but the Nyquist band is {half:.4g} rad/s; "
            f"time_step must be below {math.pi * margin / reach:.4g} s")


class Fwhm(NamedTuple):
    width: float
    multi_lobe: bool
    side_lobe_ratio: float


def intensity_fwhm(a: SpectralAmplitude, lobe_threshold: float = 0.01) -> Fwhm:
    """Full width at half maximum of ``|values|^2`` around the global peak.

    Crossings are located by linear interpolation between samples.  Secondary
    maxima outside the central lobe reaching ``lobe_threshold`` of the peak set
    ``multi_lobe``.
    """
    return profile_fwhm(a.axis, a.intensity(), lobe_threshold)


def profile_fwhm(ax, inten, lobe_threshold: float = 0.01) -> Fwhm:
    """FWHM of a sampled non-negative profile; see :func:`intensity_fwhm`."""
    ax = np.asarray(ax, dtype=float)
    inten = np.asarray(inten, dtype=float)
    n = inten.size
    m = int(np.argmax(inten))
    peak = inten[m]
    if not peak > 0:
        raise ConfigurationError("cannot measure the width of an all-zero profile")
    half = peak / 2.0

    i = m
    while i > 0 and inten[i - 1] >= half:
        i -= 1
    if i == 0:
        left = ax[0]
    else:
        y0, y1 = inten[i - 1], inten[i]
        left = ax[i - 1] + (half - y0) / (y1 - y0) * (ax[i] - ax[i - 1])
    j = m
    while j < n - 1 and inten[j + 1] >= half:
        j += 1
    if j == n - 1:
        right = ax[-1]
    else:
        y0, y1 = inten[j], inten[j + 1]
        right = ax[j] + (y0 - half) / (y0 - y1) * (ax[j + 1] - ax[j])

    # central lobe extends while intensity keeps falling
    lb = i
    while lb > 0 and inten[lb - 1] <= inten[lb]:
        lb -= 1
    rb = j
    while rb < n - 1 and inten[rb + 1] <= inten[rb]:
        rb += 1
    outside = np.concatenate([inten[:lb], inten[rb + 1:]])
    side = float(outside.max() / peak) if outside.size else 0.0
    return Fwhm(float(right - left), side >= lobe_threshold, side)


_SIMPLE_CONVERSIONS = {
    "fwhm_to_sigma": 1.0 / FWHM_PER_SIGMA,
    "sigma_to_fwhm": FWHM_PER_SIGMA,
    "ps2_to_s2": 1e-24,
    "s2_to_ps2": 1e24,
    "ps_per_nm_to_s_per_m": 1e-12 / 1e-9,
    "s_per_m_to_ps_per_nm": 1e-9 / 1e-12,
}

_WAVELENGTH_CONVERSIONS = (
    "wavelength_fwhm_to_angular",
    "angular_fwhm_to_wavelength",
    "wavelength_fwhm_to_frequency",
    "frequency_fwhm_to_wavelength",
)

CONVERSION_KINDS = tuple(_SIMPLE_CONVERSIONS) + _WAVELENGTH_CONVERSIONS


def convert_units(value, kind: str, center_wavelength: float | None = None):
    """Convert ``value`` according to ``kind`` (see ``CONVERSION_KINDS``).

    Wavelength widths use the linearized relation ``dnu = c*dlambda/lambda0**2``;
    frequency widths are in Hz, angular widths in rad/s, FWHM/sigma refer to the
    intensity FWHM of a Gaussian amplitude ``exp(-x^2/(2 sigma^2))``.
    """
    if kind in _SIMPLE_CONVERSIONS:
        return value * _SIMPLE_CONVERSIONS[kind]
    if kind not in _WAVELENGTH_CONVERSIONS:
        raise ConfigurationError(f"unknown conversion kind {kind!r}; expected one of {CONVERSION_KINDS}")
    if center_wavelength is None or not center_wavelength > 0:
        raise ConfigurationError(f"{kind} requires a positive center_wavelength")
    hz_per_m = SPEED_OF_LIGHT / center_wavelength**2
    if kind == "wavelength_fwhm_to_frequency":
        return value * hz_per_m
    if kind == "frequency_fwhm_to_wavelength":
        return value / hz_per_m
    if kind == "wavelength_fwhm_to_angular":
        return value * hz_per_m * 2.0 * math.pi
    return value / (hz_per_m * 2.0 * math.pi)


def sigma_from_wavelength_fwhm(fwhm: float, center_wavelength: float) -> float:
    """Amplitude sigma (rad/s) of a Gaussian with intensity FWHM ``fwhm`` meters."""
    angular = convert_units(fwhm, "wavelength_fwhm_to_angular", center_wavelength)
    return convert_units(angular, "fwhm_to_sigma")


# unit string -> (dimension, SI factor)
UNITS = {
    "s": ("time", 1.0), "ms": ("time", 1e-3), "us": ("time", 1e-6), "ns": ("time", 1e-9),
    "ps": ("time", 1e-12), "fs": ("time", 1e-15),
    "Hz": ("frequency", 1.0), "kHz": ("frequency", 1e3), "MHz": ("frequency", 1e6),
    "GHz": ("frequency", 1e9), "THz": ("frequency", 1e12),
    "rad/s": ("angular_frequency", 1.0),
    "m": ("length", 1.0), "um": ("length", 1e-6), "nm": ("length", 1e-9), "pm": ("length", 1e-12),
    "s2": ("gdd", 1.0), "ps2": ("gdd", 1e-24), "fs2": ("gdd", 1e-30),
    "s/m": ("dispersion", 1.0), "ps/nm": ("dispersion", 1e-12 / 1e-9),
    "rad": ("angle", 1.0), "pi_rad": ("angle", math.pi),
}


def to_si(value: float, unit: str) -> tuple[float, str]:
    """Return ``(si_value, dimension)`` for ``value`` expressed in ``unit``."""
    try:
        dim, factor = UNITS[unit]
    except KeyError:
        raise ConfigurationError(f"unknown unit {unit!r}; known units: {', '.join(UNITS)}") from None
    return value * factor, dim


def from_si(value: float, unit: str) -> float:
    return value / UNITS[unit][1]


def relative_l2_distance(a, b, ignore_global_phase: bool = True) -> float:
    """``||a - b|| / ||b||`` on sampled values, optionally minimized over a global phase."""
    x = np.asarray(getattr(a, "values", a))
    y = np.asarray(getattr(b, "values", b))
    if ignore_global_phase:
        overlap = np.vdot(x, y)
        if overlap != 0:
            x = x * (overlap / abs(overlap))
    return float(np.linalg.norm(x - y) / np.linalg.norm(y))
