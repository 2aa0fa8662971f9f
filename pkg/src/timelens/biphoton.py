"""Joint spectral amplitude of degenerate SPDC pairs.

``f(Os, Oi) = alpha(Os + Oi) * pm(Os - Oi)`` with a Gaussian pump envelope and a
Gaussian or sinc phase-matching function, sampled on a square frequency window
that is independent of the single-photon pulse grids.  Group-velocity walk-off
phases are not modelled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import sigspace
from .elements import GaussianFilter
from .errors import AliasingError, ConfigurationError
from .sigspace import FWHM_PER_SIGMA, Grid, SpectralAmplitude

GAUSSIAN = "gaussian"
SINC = "sinc"
PM_KINDS = (GAUSSIAN, SINC)

# sinc(x)^2 (numpy convention) falls to 1/2 at x = +-0.44295
_SINC2_HALF = 0.442946470689452

DEFAULT_SIZE = 512


@dataclass(frozen=True, eq=False)
class JointSpectralAmplitude:
    """Two-photon amplitude ``values[j, k] = f(signal_omega[j], idler_omega[k])``."""

    signal_omega: np.ndarray
    idler_omega: np.ndarray
    values: np.ndarray = field(repr=False)
    pump_fwhm: float
    pm_kind: str
    pm_bandwidth: float

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        if v.shape != (self.signal_omega.size, self.idler_omega.size):
            raise ConfigurationError("JSA values must be shaped (signal, idler)")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def signal_step(self) -> float:
        return float(self.signal_omega[1] - self.signal_omega[0])

    @property
    def idler_step(self) -> float:
        return float(self.idler_omega[1] - self.idler_omega[0])

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.signal_step * self.idler_step)

    def normalized(self) -> "JointSpectralAmplitude":
        n2 = self.norm2()
        if not n2 > 0:
            raise ConfigurationError("JSA has zero norm")
        return self.with_values(self.values / math.sqrt(n2))

    def with_values(self, values) -> "JointSpectralAmplitude":
        return JointSpectralAmplitude(self.signal_omega, self.idler_omega, values,
                                      self.pump_fwhm, self.pm_kind, self.pm_bandwidth)

    def signal_marginal(self) -> np.ndarray:
        return np.sum(np.abs(self.values) ** 2, axis=1) * self.idler_step

    def idler_marginal(self) -> np.ndarray:
        return np.sum(np.abs(self.values) ** 2, axis=0) * self.signal_step


def jsa_axis(n: int, half_width: float) -> np.ndarray:
    step = 2.0 * half_width / n
    return (np.arange(n) - n // 2) * step


def phase_matching(v, kind: str, bandwidth: float):
    """Phase-matching amplitude vs ``Os - Oi``; ``bandwidth`` is the FWHM of its square."""
    v = np.asarray(v, dtype=float)
    if kind == GAUSSIAN:
        sigma = bandwidth / FWHM_PER_SIGMA
        return np.exp(-v * v / (2.0 * sigma * sigma))
    if kind == SINC:
        return np.sinc(2.0 * _SINC2_HALF * v / bandwidth)
    raise ConfigurationError(f"unknown phase-matching kind {kind!r}; expected one of {PM_KINDS}")


def make_jsa(pump_fwhm: float, pm_kind: str, pm_bandwidth: float, n: int = DEFAULT_SIZE,
             half_width: float | None = None) -> JointSpectralAmplitude:
    """Normalized JSA on an ``n x n`` window of half-width ``half_width`` (rad/s).

    ``pump_fwhm`` is the intensity FWHM of the pump spectrum in terms of
    ``Os + Oi``; ``pm_bandwidth`` the FWHM of ``|pm|^2`` in ``Os - Oi``.
    """
    if not (pump_fwhm > 0 and pm_bandwidth > 0):
        raise ConfigurationError("pump_fwhm and pm_bandwidth must be positive")
    if pm_kind not in PM_KINDS:
        raise ConfigurationError(f"unknown phase-matching kind {pm_kind!r}; expected one of {PM_KINDS}")
    if n < 16 or n % 2:
        raise ConfigurationError(f"JSA size must be an even number >= 16, got {n}")
    needed = 2.0 * (pump_fwhm + pm_bandwidth)
    if half_width is None:
        half_width = needed
    elif half_width < 0.75 * needed:
        raise AliasingError(
            f"JSA window half-width {half_width:.4g} rad/s is too small; need at least "
            f"{0.75 * needed:.4g} rad/s for pump {pump_fwhm:.4g} and phase matching {pm_bandwidth:.4g}")
    ax = jsa_axis(n, half_width)
    s, i = np.meshgrid(ax, ax, indexing="ij")
    sigma_p = pump_fwhm / FWHM_PER_SIGMA
    f = np.exp(-((s + i) ** 2) / (2.0 * sigma_p**2)) * phase_matching(s - i, pm_kind, pm_bandwidth)
    jsa = JointSpectralAmplitude(ax, ax.copy(), f, pump_fwhm, pm_kind, pm_bandwidth)
    if pm_kind == GAUSSIAN:
        edge = max(np.abs(f[0]).max(), np.abs(f[-1]).max(), np.abs(f[:, 0]).max(), np.abs(f[:, -1]).max())
        if edge > 1e-5:
            raise AliasingError(f"JSA amplitude at the window edge is {edge:.3g} of peak; enlarge half_width")
    return jsa.normalized()


def marginal_fwhm(jsa: JointSpectralAmplitude) -> float:
    return sigspace.profile_fwhm(jsa.signal_omega, jsa.signal_marginal()).width


def calibrate_pm_bandwidth(pump_fwhm: float, target_marginal_fwhm: float, pm_kind: str = GAUSSIAN,
                           n: int = DEFAULT_SIZE) -> float:
    """Phase-matching bandwidth giving a signal marginal of ``target_marginal_fwhm``.

    One-dimensional root search on the numerically measured marginal width.
    """
    def mismatch(bw):
        return marginal_fwhm(make_jsa(pump_fwhm, pm_kind, bw, n)) - target_marginal_fwhm

    lo, hi = 0.1 * target_marginal_fwhm, 20.0 * target_marginal_fwhm
    if mismatch(lo) > 0:
        raise ConfigurationError(
            "target marginal is narrower than the pump allows; no phase-matching bandwidth fits")
    return brentq(mismatch, lo, hi, xtol=1e-9 * target_marginal_fwhm, rtol=1e-12)


def apply_idler_filter(jsa: JointSpectralAmplitude, filt: GaussianFilter):
    """Mask the idler with ``sqrt(T(Oi))``.

    Returns ``(unnormalized_jsa, heralding_efficiency)`` where the efficiency is
    the squared norm left after filtering.
    """
    mask = np.sqrt(filt.transmission(jsa.idler_omega))
    out = jsa.with_values(jsa.values * mask[np.newaxis, :])
    return out, out.norm2()


def schmidt_decomposition(jsa: JointSpectralAmplitude):
    """Normalized Schmidt weights and signal/idler mode functions.

    Returns ``(weights, signal_modes, idler_modes)``; ``signal_modes[:, k]`` and
    ``idler_modes[:, k]`` are unit-norm functions sampled on the JSA axes.
    """
    hs, hi = jsa.signal_step, jsa.idler_step
    u, s, vh = np.linalg.svd(jsa.values * math.sqrt(hs * hi), full_matrices=False)
    total = float(np.sum(s * s))
    if not total > 0:
        raise ConfigurationError("JSA has zero norm")
    return s * s / total, u / math.sqrt(hs), vh.T / math.sqrt(hi)


def purity(jsa: JointSpectralAmplitude) -> float:
    """``Tr(rho_s^2)`` of the signal reduced state from the Schmidt weights."""
    weights, _, _ = schmidt_decomposition(jsa)
    return float(np.sum(weights**2))


def heralded_signal(jsa: JointSpectralAmplitude, grid: Grid | None = None,
                    center_wavelength: float = 1551.5e-9):
    """Dominant Schmidt mode of the signal photon and its purity.

    The mode is moved onto ``grid`` by band-limited (sinc) interpolation; with
    ``grid=None`` a 4096-point grid whose frequency step equals the JSA step is
    used, so the JSA samples are reproduced exactly.
    """
    if not jsa.norm2() > 0:
        raise ConfigurationError("cannot herald from a zero-norm JSA")
    weights, modes, _ = schmidt_decomposition(jsa)
    mode = modes[:, 0]
    k = int(np.argmax(np.abs(mode)))
    mode = mode * (abs(mode[k]) / mode[k])
    h = jsa.signal_step
    if grid is None:
        grid = sigspace.make_grid(4096, 2.0 * math.pi / h, center_wavelength)
    w = grid.omega
    inside = np.abs(w) <= abs(jsa.signal_omega).max() + h
    values = np.zeros(w.size, dtype=complex)
    for start in range(0, int(inside.sum()), 4096):
        idx = np.flatnonzero(inside)[start:start + 4096]
        kernel = np.sinc((w[idx, np.newaxis] - jsa.signal_omega[np.newaxis, :]) / h)
        values[idx] = kernel @ mode
    amp = SpectralAmplitude(grid, values).normalized()
    return amp, float(np.sum(weights**2))


def biphoton_coincidence(jsa: JointSpectralAmplitude, delays) -> np.ndarray:
    """HOM coincidence probability between the two photons of one pair.

    ``p(tau) = 1/2 - 1/2 Re sum f(O1,O2) f*(O2,O1) exp(i(O1-O2) tau)``
    on the normalized JSA.  Scalar ``delays`` give a scalar result.
    """
    if jsa.signal_omega.shape != jsa.idler_omega.shape or not np.allclose(
            jsa.signal_omega, jsa.idler_omega, rtol=0, atol=1e-9 * jsa.signal_step):
        raise ConfigurationError("biphoton interference needs identical signal and idler axes")
    f = jsa.normalized().values
    h2 = jsa.signal_step * jsa.idler_step
    m = f * np.conj(f.T) * h2
    taus = np.atleast_1d(np.asarray(delays, dtype=float))
    ph = np.exp(1j * np.outer(taus, jsa.signal_omega))
    # sum_jk m[j,k] e^{i w_j tau} e^{-i w_k tau}
    val = np.sum((ph @ m) * np.conj(ph), axis=1).real
    p = 0.5 - 0.5 * val
    clipped = np.clip(p, 0.0, 1.0)
    excess = float(np.max(np.abs(clipped - p)))
    if excess >= 1e-9:
        raise ConfigurationError(f"coincidence probability left [0, 1] by {excess:.3g}")
    return clipped if np.ndim(delays) else float(clipped[0])
