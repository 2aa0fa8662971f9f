"""Hong-Ou-Mandel interference of two independent pure photons.

Coincidence probability for photons ``a`` and ``b`` with relative delay ``tau``::

    p(tau) = 1/2 - 1/2 |integral a(Omega) b*(Omega) exp(i Omega tau) dOmega|^2

Two visibility conventions are used throughout and always labelled:
``depth = (p_max - p_min)/p_max`` and ``michelson = (p_max - p_min)/(p_max + p_min)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError, FitError, TimelensError
from .sigspace import SpectralAmplitude

DEPTH = "depth"
MICHELSON = "michelson"
CONVENTIONS = (DEPTH, MICHELSON)

NORM_TOLERANCE = 1e-6
# 1.4826 * MAD estimates a Gaussian standard deviation
MAD_SCALE = 1.4826


@dataclass(frozen=True, eq=False)
class HomScan:
    """Delay scan of one dip, optionally with (synthetic) detector counts."""

    delays: np.ndarray
    probabilities: np.ndarray
    coincidences: Optional[np.ndarray] = None
    singles_a: Optional[np.ndarray] = None
    singles_b: Optional[np.ndarray] = None
    rate_scale: Optional[float] = None
    singles_scale: Optional[float] = None
    valid: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=float)
        p = np.asarray(self.probabilities, dtype=float)
        if d.ndim != 1 or d.shape != p.shape:
            raise ConfigurationError("delays and probabilities must be 1-D arrays of equal length")
        if d.size == 0:
            raise ConfigurationError("delay scan is empty")
        if np.any(np.diff(d) <= 0):
            raise ConfigurationError("delays must be strictly increasing")
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "probabilities", p)
        for name in ("coincidences", "singles_a", "singles_b"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=np.int64)
                if v.shape != d.shape:
                    raise ConfigurationError(f"{name} must have one entry per delay")
                if np.any(v < 0):
                    raise ConfigurationError(f"{name} must be non-negative")
                object.__setattr__(self, name, v)
        valid = np.ones(d.shape, bool) if self.valid is None else np.asarray(self.valid, bool)
        object.__setattr__(self, "valid", valid)

    @property
    def has_counts(self) -> bool:
        return self.coincidences is not None


class DipFit(NamedTuple):
    """Gaussian dip ``baseline - depth * exp(-(tau-center)^2 / (2 width^2))``."""

    width: float
    center: float
    depth: float
    baseline: float
    visibility_depth: float
    residual_norm: float
    noise_scale: float
    no_significant_dip: bool
    iterations: int

    @property
    def visibility_michelson(self) -> float:
        return visibility_from_extrema(self.baseline - self.depth, self.baseline, MICHELSON) \
            if self.baseline > 0 and 0 <= self.depth <= self.baseline else 0.0

    @property
    def fwhm(self) -> float:
        return 2.0 * math.sqrt(2.0 * math.log(2.0)) * self.width

    def model(self, tau):
        return gaussian_dip(np.asarray(tau, float), self.baseline, self.depth, self.center, self.width)


def gaussian_dip(tau, baseline, depth, center, width):
    return baseline - depth * np.exp(-((tau - center) ** 2) / (2.0 * width * width))


def _check_pair(a: SpectralAmplitude, b: SpectralAmplitude) -> None:
    if a.grid != b.grid:
        raise ConfigurationError("photons must share the same grid")
    for name, x in (("a", a), ("b", b)):
        n2 = x.norm2()
        if abs(n2 - 1.0) > NORM_TOLERANCE:
            raise ConfigurationError(
                f"photon {name} has squared norm {n2:.6g}; renormalize lossy outputs with "
                f".normalized() before computing interference")


def overlap(a: SpectralAmplitude, b: SpectralAmplitude, delays) -> np.ndarray:
    """``integral a b* exp(i Omega tau) dOmega`` for every delay (no norm checks)."""
    af, bf = a.to_frequency(), b.to_frequency()
    prod = af.values * np.conj(bf.values)
    mag = np.abs(prod)
    keep = mag > 1e-24 * mag.max() if mag.max() > 0 else np.zeros(mag.shape, bool)
    w = af.grid.omega[keep]
    prod = prod[keep] * af.grid.angular_frequency_step
    taus = np.atleast_1d(np.asarray(delays, dtype=float))
    out = np.empty(taus.shape, dtype=complex)
    chunk = max(1, 2_000_000 // max(w.size, 1))
    for i in range(0, taus.size, chunk):
        out[i:i + chunk] = np.exp(1j * np.outer(taus[i:i + chunk], w)) @ prod
    return out


def coincidence_probability(a: SpectralAmplitude, b: SpectralAmplitude, tau: float) -> float:
    _check_pair(a, b)
    return float(0.5 - 0.5 * abs(overlap(a, b, [tau])[0]) ** 2)


def scan_delays(tau_min: float, tau_max: float, step: float) -> np.ndarray:
    if not step > 0:
        raise ConfigurationError(f"scan step must be positive, got {step!r}")
    if not tau_max >= tau_min:
        raise ConfigurationError("scan range must satisfy tau_min <= tau_max")
    n = int(math.floor((tau_max - tau_min) / step + 1e-9)) + 1
    return tau_min + step * np.arange(n)


def dip_scan(a: SpectralAmplitude, b: SpectralAmplitude, tau_min: float, tau_max: float,
             step: float) -> HomScan:
    _check_pair(a, b)
    delays = scan_delays(tau_min, tau_max, step)
    p = 0.5 - 0.5 * np.abs(overlap(a, b, delays)) ** 2
    return HomScan(delays, p)


def refine_minimum(a: SpectralAmplitude, b: SpectralAmplitude, scan: HomScan) -> tuple[float, float]:
    """Locate the dip minimum to high precision, starting from the best scan sample.

    Returns ``(tau_min, p_min)``.
    """
    from scipy.optimize import minimize_scalar

    i = int(np.argmin(scan.probabilities))
    d = scan.delays
    lo = d[max(i - 1, 0)]
    hi = d[min(i + 1, d.size - 1)]
    best = (float(d[i]), float(scan.probabilities[i]))
    if hi <= lo:
        return best

    def p(tau):
        return 0.5 - 0.5 * abs(overlap(a, b, [tau])[0]) ** 2

    res = minimize_scalar(p, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-6 * (hi - lo)})
    if res.fun < best[1]:
        return float(res.x), float(res.fun)
    return best


def visibility_from_extrema(p_min: float, p_max: float, convention: str = MICHELSON) -> float:
    if convention not in CONVENTIONS:
        raise ConfigurationError(f"unknown visibility convention {convention!r}")
    if p_max == 0:
        raise ConfigurationError("p_max must be positive")
    if not (0 <= p_min <= p_max):
        raise ConfigurationError(f"need 0 <= p_min <= p_max, got {p_min!r}, {p_max!r}")
    if convention == DEPTH:
        return (p_max - p_min) / p_max
    return (p_max - p_min) / (p_max + p_min)


def ideal_p_min(compression: float) -> float:
    """Minimum coincidence probability after an ideal collimated time lens."""
    r = 1.0 / (2.0 * compression)
    return 0.5 * (1.0 - 1.0 / math.sqrt(1.0 + r * r))


def analytic_visibility_limit(compression: float) -> float:
    """``F / (sqrt(4 F^2 + 1) - F)``: best Michelson visibility of an ideal converter."""
    if not compression > 0:
        raise ConfigurationError(f"compression factor must be positive, got {compression!r}")
    f = compression
    return f / (math.sqrt(4.0 * f * f + 1.0) - f)


def mismatch_visibility(sigma_a: float, sigma_b: float) -> float:
    """Depth visibility ``2 sa sb / (sa^2 + sb^2)`` of transform-limited Gaussians."""
    if not (sigma_a > 0 and sigma_b > 0):
        raise ConfigurationError("bandwidths must be positive")
    return 2.0 * sigma_a * sigma_b / (sigma_a**2 + sigma_b**2)


def teleportation_gain(v_conv: float, t_conv: float, v_ref: float, t_ref: float) -> float:
    """Rate of correctly teleported states relative to the filtering reference."""
    for name, v in (("v_conv", v_conv), ("t_conv", t_conv), ("v_ref", v_ref), ("t_ref", t_ref)):
        if not (0.0 <= v <= 1.0):
            raise ConfigurationError(f"{name} must lie in [0, 1], got {v!r}")
    denom = v_ref * t_ref
    if denom == 0:
        raise ConfigurationError("reference visibility and transmission must be non-zero")
    return v_conv * t_conv / denom


def _initial_guess(x, y):
    n = x.size
    q = max(1, n // 4)
    baseline = float(np.mean(np.concatenate([y[:q], y[-q:]])))
    i = int(np.argmin(y))
    center = float(x[i])
    depth = baseline - float(y[i])
    width = (x[-1] - x[0]) / 8.0
    if depth > 0:
        level = baseline - depth / 2.0
        j = i
        while j > 0 and y[j - 1] < level:
            j -= 1
        k = i
        while k < n - 1 and y[k + 1] < level:
            k += 1
        if j > 0 and k < n - 1:
            left = x[j - 1] + (y[j - 1] - level) / (y[j - 1] - y[j]) * (x[j] - x[j - 1])
            right = x[k] + (level - y[k]) / (y[k + 1] - y[k]) * (x[k + 1] - x[k])
            if right > left:
                width = (right - left) / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    return np.array([baseline, depth, center, width], dtype=float)


def _residual_and_jacobian(theta, x, y):
    baseline, depth, center, width = theta
    u = x - center
    g = np.exp(-(u * u) / (2.0 * width * width))
    r = baseline - depth * g - y
    jac = np.empty((x.size, 4))
    jac[:, 0] = 1.0
    jac[:, 1] = -g
    jac[:, 2] = -depth * g * u / (width * width)
    jac[:, 3] = -depth * g * u * u / width**3
    return r, jac


def fit_gaussian_dip(scan: HomScan, max_iter: int = 200, rtol: float = 1e-10) -> DipFit:
    """Levenberg-Marquardt fit of a four-parameter Gaussian dip.

    Fits only delays flagged valid.  Raises :class:`FitError` when the relative
    parameter change does not fall below ``rtol`` within ``max_iter`` iterations.
    """
    mask = scan.valid & np.isfinite(scan.probabilities)
    x_raw = scan.delays[mask]
    y_raw = scan.probabilities[mask]
    if x_raw.size < 8:
        raise ConfigurationError(f"need at least 8 valid points for a dip fit, got {x_raw.size}")

    # work in O(1) units
    x0 = 0.5 * (x_raw[0] + x_raw[-1])
    xs = (x_raw[-1] - x_raw[0]) / 2.0 or 1.0
    ys = float(np.max(np.abs(y_raw))) or 1.0
    x = (x_raw - x0) / xs
    y = y_raw / ys

    theta = _initial_guess(x, y)
    r, jac = _residual_and_jacobian(theta, x, y)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jtj = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(jtj).copy()
        floor = 1e-12 * max(float(diag.max()), 1e-300)
        diag = np.maximum(diag, floor)
        accepted = False
        while lam < 1e20:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = theta + step
            if trial[3] == 0:
                lam *= 10.0
                continue
            r_new, jac_new = _residual_and_jacobian(trial, x, y)
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no downhill direction left at machine precision
            converged = True
            break
        change = float(np.linalg.norm(step) / max(np.linalg.norm(theta), 1e-300))
        theta, r, jac, cost = trial, r_new, jac_new, cost_new
        lam = max(lam / 10.0, 1e-15)
        if change < rtol or cost == 0.0:
            converged = True
            break
    baseline, depth, center, width = theta
    resid = r * ys
    noise = MAD_SCALE * float(np.median(np.abs(resid - np.median(resid))))
    depth_abs = depth * ys
    base_abs = baseline * ys
    # a "dip" spanning fewer than two sampling steps is one or two noisy samples, not a resolved feature
    step = float(np.median(np.diff(x_raw)))
    unresolved = 2.0 * math.sqrt(2.0 * math.log(2.0)) * abs(width) * xs < 2.0 * step
    no_dip = depth_abs <= 2.0 * noise or base_abs <= 0 or depth_abs <= 0 or unresolved
    if not converged and not no_dip:
        # an insignificant dip has unidentifiable width/depth; only a real dip must converge
        raise FitError(
            f"Gaussian dip fit did not converge in {max_iter} iterations",
            last_params={"baseline": baseline * ys, "depth": depth * ys,
                         "center": center * xs + x0, "width": abs(width) * xs},
            residual_norm=math.sqrt(cost) * ys)
    vis = depth_abs / base_abs if base_abs > 0 else 0.0
    return DipFit(
        width=float(abs(width) * xs),
        center=float(center * xs + x0),
        depth=float(depth_abs),
        baseline=float(base_abs),
        visibility_depth=float(min(max(vis, 0.0), 1.0)),
        residual_norm=float(np.linalg.norm(resid)),
        noise_scale=noise,
        no_significant_dip=bool(no_dip),
        iterations=it,
    )


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def synthesize_counts(scan: HomScan, rate_scale: float, seed: int, singles_scale: float | None = None,
                      drift: float = 1.0) -> HomScan:
    """Poisson coincidence and singles counts for a probability scan.

    ``rate_scale`` is the mean coincidence count for ``p = 1``;
    ``singles_scale`` the mean singles count per arm (default 100x ``rate_scale``).
    ``drift`` ramps the arm-a detection efficiency linearly from 1 to ``drift``
    across the scan, scaling both its singles and the coincidences.
    """
    if not rate_scale > 0:
        raise ConfigurationError(f"rate_scale must be positive, got {rate_scale!r}")
    singles_scale = 100.0 * rate_scale if singles_scale is None else singles_scale
    if not singles_scale > 0:
        raise ConfigurationError(f"singles_scale must be positive, got {singles_scale!r}")
    rng = _rng(seed)
    n = scan.delays.size
    eff = np.linspace(1.0, drift, n) if n > 1 else np.array([1.0])
    p = np.clip(scan.probabilities, 0.0, None)
    coinc = rng.poisson(rate_scale * p * eff)
    sa = rng.poisson(singles_scale * eff)
    sb = rng.poisson(singles_scale * np.ones(n))
    return replace(scan, coincidences=coinc, singles_a=sa, singles_b=sb,
                   rate_scale=float(rate_scale), singles_scale=float(singles_scale), valid=None)


def normalize_counts(scan: HomScan) -> HomScan:
    """Coincidences divided by the product of singles, rescaled to probability units.

    Delays with a zero singles count are flagged invalid.  With known rate scales
    the factor ``singles_scale**2 / rate_scale`` is used; otherwise the outer
    quartiles are pinned to the distinguishable baseline 1/2.
    """
    if not scan.has_counts:
        raise ConfigurationError("scan carries no counts to normalize")
    c = scan.coincidences.astype(float)
    sa = scan.singles_a.astype(float)
    sb = scan.singles_b.astype(float)
    valid = (sa > 0) & (sb > 0)
    ratio = np.full(c.shape, np.nan)
    ratio[valid] = c[valid] / (sa[valid] * sb[valid])
    if scan.rate_scale and scan.singles_scale:
        p = ratio * (scan.singles_scale**2 / scan.rate_scale)
    else:
        good = ratio[valid]
        q = max(1, good.size // 4)
        outer = np.mean(np.concatenate([good[:q], good[-q:]])) if good.size else np.nan
        p = ratio * (0.5 / outer)
    return replace(scan, probabilities=p, valid=valid)


class BootstrapResult(NamedTuple):
    std_error: float
    mean: float
    n_failed: int
    samples: np.ndarray


def bootstrap_visibility_uncertainty(scan: HomScan, n_resamples: int, seed: int) -> BootstrapResult:
    """Parametric bootstrap of the fitted depth visibility.

    Every count is redrawn from a Poisson law with the observed value as mean,
    renormalized and refitted.  Resample ``k`` uses its own child seed, so the
    result does not depend on evaluation order.
    """
    if not scan.has_counts:
        raise ConfigurationError("bootstrap needs a scan with counts")
    if n_resamples < 100:
        raise ConfigurationError(f"n_resamples must be >= 100, got {n_resamples}")
    children = np.random.SeedSequence(seed).spawn(n_resamples)
    values = []
    failed = 0
    for child in children:
        rng = np.random.Generator(np.random.Philox(child))
        resampled = replace(scan,
                            coincidences=rng.poisson(scan.coincidences),
                            singles_a=rng.poisson(scan.singles_a),
                            singles_b=rng.poisson(scan.singles_b), valid=None)
        try:
            fit = fit_gaussian_dip(normalize_counts(resampled))
        except TimelensError:
            failed += 1
            continue
        values.append(fit.visibility_depth)
    if failed > 0.2 * n_resamples:
        raise FitError(f"{failed} of {n_resamples} bootstrap refits failed")
    arr = np.array(values)
    return BootstrapResult(float(np.std(arr, ddof=1)), float(np.mean(arr)), failed, arr)
