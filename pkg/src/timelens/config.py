"""Run configuration: TOML parsing with mandatory units, validation and canonical serialization.

Physical quantities are strings ``"<number> <unit>"`` (for example ``"22 ps2"``,
``"10 GHz"``, ``"4.27 pi_rad"``, ``"0.2 nm"``).  Dimensionless quantities
(transmissions, counts, compression factors) are bare numbers.  Unknown keys
are errors.  :func:`serialize_config` writes every quantity in SI units so that
``parse_config_text(serialize_config(cfg)) == cfg`` holds exactly.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib
import tomli_w

from . import biphoton, elements, hom, optimizer, sigspace
from .errors import ConfigurationError
from .spectrometer import DftConfig

COMMANDS = ("simulate", "optimize", "analytic", "spectrum")

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s+(\S+)\s*$")

# canonical SI unit per dimension, used when serializing
_SI_UNIT = {"time": "s", "frequency": "Hz", "angular_frequency": "rad/s", "length": "m",
            "gdd": "s2", "dispersion": "s/m", "angle": "rad"}


# ---------------------------------------------------------------------------
# typed configuration

@dataclass(frozen=True)
class GridSpec:
    n_samples: int = 2**15
    time_span: Optional[float] = None
    center_wavelength: float = 1551.5e-9


@dataclass(frozen=True)
class PhotonSpec:
    """Transform-limited Gaussian photon; ``sigma`` and ``center_offset`` in rad/s."""

    sigma: float
    center_offset: float = 0.0


@dataclass(frozen=True)
class JsaSourceSpec:
    """Heralded SPDC signal photon; bandwidths are angular FWHMs in rad/s."""

    pump_fwhm: float
    marginal_fwhm: float
    pm_kind: str = biphoton.GAUSSIAN
    idler_filter_fwhm: Optional[float] = None
    size: int = biphoton.DEFAULT_SIZE


@dataclass(frozen=True)
class ScanSpec:
    start: float
    stop: float
    step: float
    rate_scale: Optional[float] = None
    singles_scale: Optional[float] = None
    drift: float = 1.0
    bootstrap: int = 0


@dataclass(frozen=True)
class OptimizeJob:
    scenario: optimizer.Scenario
    budget: int


@dataclass(frozen=True)
class AnalyticSpec:
    compressions: tuple = (2.0, 10.0)
    curve_min: float = 1.0
    curve_max: float = 1000.0
    curve_points: int = 61
    input_sigma: float = sigspace.sigma_from_wavelength_fwhm(2e-9, 1551.5e-9)
    modulation_frequency: float = 10e9


Source = Union[PhotonSpec, JsaSourceSpec]


@dataclass(frozen=True)
class RunConfig:
    command: Optional[str] = None
    seed: int = 0
    out_dir: Optional[str] = None
    convention: str = hom.MICHELSON
    grid: GridSpec = field(default_factory=GridSpec)
    source: Optional[Source] = None
    reference: Optional[PhotonSpec] = None
    pipeline: tuple = ()
    scan: Optional[ScanSpec] = None
    dft: Optional[DftConfig] = None
    optimize: tuple = ()
    analytic: Optional[AnalyticSpec] = None


# ---------------------------------------------------------------------------
# parsing helpers

class _Table:
    """Dict wrapper that tracks the key path and rejects unconsumed keys."""

    def __init__(self, data: Any, path: str, ctx: "_Context"):
        if not isinstance(data, dict):
            raise ctx.error(path, f"expected a table, got {type(data).__name__}")
        self.data = dict(data)
        self.path = path
        self.ctx = ctx

    def key(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def has(self, name: str) -> bool:
        return name in self.data

    def raw(self, name: str, default=KeyError):
        if name not in self.data:
            if default is KeyError:
                raise self.ctx.error(self.key(name), "missing required key")
            return default
        return self.data.pop(name)

    def quantity(self, name: str, dims, default=KeyError):
        dims = (dims,) if isinstance(dims, str) else tuple(dims)
        value = self.raw(name, default)
        if value is default and default is not KeyError:
            return default, None
        return self.ctx.quantity(value, dims, self.key(name))

    def number(self, name: str, default=KeyError, integer=False):
        value = self.raw(name, default)
        if value is default and default is not KeyError:
            return default
        key = self.key(name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.ctx.error(key, f"expected a bare number, got {value!r}")
        if integer and not isinstance(value, int):
            raise self.ctx.error(key, f"expected an integer, got {value!r}")
        if not math.isfinite(value):
            raise self.ctx.error(key, "value must be finite")
        return value

    def string(self, name: str, choices=None, default=KeyError):
        value = self.raw(name, default)
        if value is default and default is not KeyError:
            return default
        if not isinstance(value, str):
            raise self.ctx.error(self.key(name), f"expected a string, got {value!r}")
        if choices is not None and value not in choices:
            raise self.ctx.error(self.key(name), f"{value!r} is not one of {', '.join(choices)}")
        return value

    def table(self, name: str, default=KeyError):
        value = self.raw(name, default)
        if value is default and default is not KeyError:
            return default
        return _Table(value, self.key(name), self.ctx)

    def finish(self) -> None:
        if self.data:
            first = sorted(self.data)[0]
            raise self.ctx.error(self.key(first), f"unknown key(s): {', '.join(sorted(self.data))}")


class _Context:
    def __init__(self, text: str, source: str):
        self.lines = text.splitlines()
        self.source = source

    def line_of(self, path: str) -> Optional[int]:
        leaf = re.split(r"[.\[]", path.rsplit(".", 1)[-1])[0]
        pat = re.compile(rf"^\s*(\[+\s*)?([\w.]*\.)?{re.escape(leaf)}\s*(=|\]|\.)")
        for i, line in enumerate(self.lines, 1):
            if pat.match(line):
                return i
        return None

    def error(self, path: str, message: str) -> ConfigurationError:
        line = self.line_of(path) if path else None
        where = f"{self.source}:{line}" if line else self.source
        err = ConfigurationError(f"{where}: {path}: {message}")
        err.key = path
        err.line = line
        return err

    def quantity(self, value, dims: tuple, key: str):
        if isinstance(value, bool) or isinstance(value, (int, float)):
            raise self.error(key, f"missing unit: write e.g. \"{value} {_example_unit(dims[0])}\"")
        if not isinstance(value, str):
            raise self.error(key, f"expected a quantity string \"<number> <unit>\", got {value!r}")
        m = _QUANTITY.match(value)
        if not m:
            raise self.error(key, f"cannot parse quantity {value!r}; expected \"<number> <unit>\"")
        try:
            si, dim = sigspace.to_si(float(m.group(1)), m.group(2))
        except ConfigurationError as exc:
            raise self.error(key, str(exc)) from None
        if dim not in dims:
            raise self.error(key, f"unit {m.group(2)!r} has dimension {dim}; expected {' or '.join(dims)}")
        if not math.isfinite(si):
            raise self.error(key, "value must be finite")
        return si, dim


def _example_unit(dim: str) -> str:
    return {"time": "ps", "frequency": "GHz", "angular_frequency": "rad/s", "length": "nm",
            "gdd": "ps2", "dispersion": "ps/nm", "angle": "pi_rad"}.get(dim, _SI_UNIT.get(dim, ""))


def _bandwidth(t: _Table, name: str, lam0: float, default=KeyError):
    """Spectral width as angular frequency; accepts wavelength, Hz or rad/s."""
    value, dim = t.quantity(name, ("length", "frequency", "angular_frequency"), default)
    if dim is None:
        return value
    if dim == "length":
        return sigspace.convert_units(value, "wavelength_fwhm_to_angular", lam0)
    if dim == "frequency":
        return 2.0 * math.pi * value
    return value


def _positive(ctx: _Context, key: str, value, strict=True):
    if (strict and not value > 0) or (not strict and value < 0):
        raise ctx.error(key, f"must be {'positive' if strict else 'non-negative'}, got {value!r}")
    return value


def _sigma(t: _Table, prefix: str, lam0: float, default=KeyError) -> float:
    """Amplitude sigma from either ``<prefix>fwhm`` or ``<prefix>sigma`` (exactly one)."""
    fk, sk = prefix + "fwhm", prefix + "sigma"
    if t.has(fk) and t.has(sk):
        raise t.ctx.error(t.key(sk), f"give only one of '{fk}' or '{sk}'")
    if t.has(fk):
        sigma = sigspace.convert_units(_bandwidth(t, fk, lam0), "fwhm_to_sigma")
    elif t.has(sk):
        sigma = _bandwidth(t, sk, lam0)
    elif default is not KeyError:
        return default
    else:
        raise t.ctx.error(t.key(fk), f"missing required key (or '{sk}')")
    return _positive(t.ctx, t.key(fk), sigma)


def _photon(t: _Table, lam0: float) -> PhotonSpec:
    sigma = _sigma(t, "", lam0)
    offset = _bandwidth(t, "center_offset", lam0, 0.0)
    t.finish()
    return PhotonSpec(sigma, offset)


def _source(t: _Table, lam0: float) -> Source:
    kind = t.string("kind", ("gaussian", "jsa"), "gaussian")
    if kind == "gaussian":
        return _photon(t, lam0)
    # the pump sits at twice the carrier frequency, i.e. at half the wavelength
    pump = _positive(t.ctx, t.key("pump_fwhm"), _bandwidth(t, "pump_fwhm", lam0 / 2.0))
    marginal = _positive(t.ctx, t.key("marginal_fwhm"), _bandwidth(t, "marginal_fwhm", lam0))
    pm = t.string("pm_kind", biphoton.PM_KINDS, biphoton.GAUSSIAN)
    filt = _bandwidth(t, "idler_filter_fwhm", lam0, None)
    if filt is not None:
        _positive(t.ctx, t.key("idler_filter_fwhm"), filt)
    size = t.number("size", biphoton.DEFAULT_SIZE, integer=True)
    t.finish()
    return JsaSourceSpec(pump, marginal, pm, filt, size)


_ELEMENT_TYPES = ("gdd", "quadratic_time_phase", "sinusoidal", "delay", "filter", "attenuator")


def _element(t: _Table, lam0: float):
    kind = t.string("type", _ELEMENT_TYPES)
    ctx = t.ctx
    try:
        if kind == "gdd":
            el = elements.GDD(t.quantity("gdd", "gdd")[0])
        elif kind == "quadratic_time_phase":
            el = _quadratic(t)
        elif kind == "sinusoidal":
            amp = t.quantity("amplitude", "angle")[0]
            freq = t.quantity("frequency", "frequency")[0]
            offset = t.quantity("offset", "time", 0.0)[0]
            el = elements.SinusoidalTimePhase(amp, freq, offset)
        elif kind == "delay":
            el = elements.Delay(t.quantity("delay", "time")[0])
        elif kind == "filter":
            fwhm = _bandwidth(t, "fwhm", lam0)
            offset = _bandwidth(t, "center_offset", lam0, 0.0)
            peak = t.number("peak_transmission", 1.0)
            el = elements.GaussianFilter(fwhm, offset, peak)
        else:
            el = elements.Attenuator(t.number("transmission"))
    except ConfigurationError as exc:
        if getattr(exc, "key", None):
            raise
        raise ctx.error(t.path, str(exc)) from None
    t.finish()
    return el


def _quadratic(t: _Table) -> elements.QuadraticTimePhase:
    """Chirp rate given directly as its focal GDD (``K = 1/focal_gdd``)."""
    focal = t.quantity("focal_gdd", "gdd")[0]
    if focal == 0:
        raise t.ctx.error(t.key("focal_gdd"), "focal GDD must be non-zero")
    return elements.QuadraticTimePhase(1.0 / focal)


def _status(t: _Table, name: str, dims, default=KeyError):
    if not t.has(name):
        if default is KeyError:
            raise t.ctx.error(t.key(name), "missing required key")
        return default
    value = t.data[name]
    if isinstance(value, dict):
        sub = t.table(name)
        lo = sub.quantity("lower", dims)[0]
        hi = sub.quantity("upper", dims)[0]
        sub.finish()
        try:
            return optimizer.Free(lo, hi)
        except ConfigurationError as exc:
            raise t.ctx.error(sub.path, str(exc)) from None
    return optimizer.Fixed(t.quantity(name, dims)[0])


def _scenario(t: _Table, grid: GridSpec, convention: str, index: int) -> OptimizeJob:
    lam0 = grid.center_wavelength
    name = t.string("name", default=str(index + 1))
    sa = _sigma(t, "input_", lam0)
    sb = _sigma(t, "target_", lam0)
    kw = dict(
        gdd=_status(t, "gdd", "gdd"),
        modulation_frequency=_status(t, "modulation_frequency", "frequency"),
        amplitude=_status(t, "amplitude", "angle"),
        offset=_status(t, "offset", "time", optimizer.Fixed(0.0)),
    )
    lens = t.string("lens", optimizer.LENSES, optimizer.SINUSOIDAL)
    budget = t.number("budget", None, integer=True)
    scan_step = t.quantity("scan_step", "time", 0.5e-12)[0]
    t.finish()
    try:
        sc = optimizer.Scenario(name, sa, sb, center_wavelength=lam0, convention=convention,
                                n_samples=grid.n_samples, time_span=grid.time_span, lens=lens,
                                scan_step=scan_step, **kw)
    except ConfigurationError as exc:
        raise t.ctx.error(t.path, str(exc)) from None
    if budget is None:
        budget = optimizer.default_budget(sc)
    if budget < 100:
        raise t.ctx.error(t.key("budget"), f"budget must be >= 100 evaluations, got {budget}")
    return OptimizeJob(sc, budget)


def _table_s1_jobs(t: _Table, grid: GridSpec, convention: str) -> tuple:
    rows = t.raw("rows", ["1", "2", "3"])
    if not isinstance(rows, list) or any(r not in ("1", "2", "3") for r in rows) or not rows:
        raise t.ctx.error(t.key("rows"), "rows must be a non-empty list drawn from \"1\", \"2\", \"3\"")
    scen = optimizer.table_s1_scenarios(grid.n_samples, convention,
                                        center_wavelength=grid.center_wavelength)
    return tuple(OptimizeJob(s, optimizer.default_budget(s)) for s in scen if s.name in rows)


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    ctx = _Context(text, source)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{source}: invalid TOML: {exc}") from None
    top = _Table(data, "", ctx)
    command = top.string("command", COMMANDS, None)
    seed = top.number("seed", 0, integer=True)
    if seed < 0:
        raise ctx.error("seed", "seed must be >= 0")
    out_dir = top.string("out_dir", default=None)
    convention = top.string("convention", hom.CONVENTIONS, hom.MICHELSON)

    grid = GridSpec()
    if top.has("grid"):
        g = top.table("grid")
        n = g.number("n_samples", 2**15, integer=True)
        span = g.quantity("time_span", "time", None)[0]
        lam0 = g.quantity("center_wavelength", "length", 1551.5e-9)[0]
        g.finish()
        if n < 1024 or n & (n - 1):
            raise ctx.error("grid.n_samples", f"must be a power of two >= 1024, got {n}")
        if span is not None:
            _positive(ctx, "grid.time_span", span)
        _positive(ctx, "grid.center_wavelength", lam0)
        grid = GridSpec(n, span, lam0)
    lam0 = grid.center_wavelength

    source = _source(top.table("source"), lam0) if top.has("source") else None
    reference = _photon(top.table("reference"), lam0) if top.has("reference") else None

    pipeline = ()
    if top.has("pipeline"):
        raw = top.raw("pipeline")
        if not isinstance(raw, list):
            raise ctx.error("pipeline", "expected an array of tables ([[pipeline]])")
        pipeline = tuple(_element(_Table(el, f"pipeline[{i}]", ctx), lam0) for i, el in enumerate(raw))

    scan = None
    if top.has("scan"):
        s = top.table("scan")
        start = s.quantity("start", "time")[0]
        stop = s.quantity("stop", "time")[0]
        step = _positive(ctx, "scan.step", s.quantity("step", "time")[0])
        if not stop > start:
            raise ctx.error("scan.stop", "scan.stop must exceed scan.start")
        rate = s.number("rate_scale", None)
        singles = s.number("singles_scale", None)
        drift = s.number("drift", 1.0)
        boot = s.number("bootstrap", 0, integer=True)
        s.finish()
        if rate is not None:
            _positive(ctx, "scan.rate_scale", rate)
        if singles is not None:
            _positive(ctx, "scan.singles_scale", singles)
        _positive(ctx, "scan.drift", drift)
        if boot and boot < 100:
            raise ctx.error("scan.bootstrap", "bootstrap needs >= 100 resamples (or 0 to disable)")
        if boot and rate is None:
            raise ctx.error("scan.bootstrap", "bootstrap requires scan.rate_scale (synthetic counts)")
        scan = ScanSpec(start, stop, step, rate, singles, drift, boot)

    dft = None
    if top.has("dft"):
        d = top.table("dft")
        kw = dict(dispersion=d.quantity("dispersion", "dispersion")[0],
                  jitter_rms=d.quantity("jitter_rms", "time")[0],
                  bin_width=d.quantity("bin_width", "time", 1e-12)[0])
        if d.has("instrument_factor"):
            kw["instrument_factor"] = d.number("instrument_factor")
        d.finish()
        try:
            dft = DftConfig(**kw)
        except ConfigurationError as exc:
            raise ctx.error("dft", str(exc)) from None

    jobs = ()
    if top.has("optimize"):
        o = top.table("optimize")
        if o.has("table_s1"):
            ts = o.table("table_s1")
            jobs += _table_s1_jobs(ts, grid, convention)
            ts.finish()
        if o.has("scenario"):
            raw = o.raw("scenario")
            if not isinstance(raw, list):
                raise ctx.error("optimize.scenario", "expected an array of tables ([[optimize.scenario]])")
            jobs += tuple(_scenario(_Table(sc, f"optimize.scenario[{i}]", ctx), grid, convention, i)
                          for i, sc in enumerate(raw))
        o.finish()

    analytic = None
    if top.has("analytic"):
        a = top.table("analytic")
        comps = a.raw("compressions", [2.0, 10.0])
        if not isinstance(comps, list) or not comps or any(
                isinstance(c, bool) or not isinstance(c, (int, float)) or not c > 0 for c in comps):
            raise ctx.error("analytic.compressions", "expected a non-empty list of positive numbers")
        cmin = a.number("curve_min", 1.0)
        cmax = a.number("curve_max", 1000.0)
        npts = a.number("curve_points", 61, integer=True)
        sa = _sigma(a, "input_", lam0, sigspace.sigma_from_wavelength_fwhm(2e-9, lam0))
        fm = a.quantity("modulation_frequency", "frequency", 10e9)[0]
        a.finish()
        if not 0 < cmin < cmax:
            raise ctx.error("analytic.curve_max", "need 0 < curve_min < curve_max")
        if npts < 2:
            raise ctx.error("analytic.curve_points", "need at least 2 points")
        analytic = AnalyticSpec(tuple(float(c) for c in comps), float(cmin), float(cmax), npts, sa, fm)
    top.finish()

    cfg = RunConfig(command, seed, out_dir, convention, grid, source, reference, pipeline, scan, dft,
                    jobs, analytic)
    if command is not None:
        validate(cfg, ctx)
    return cfg


def validate(cfg: RunConfig, ctx: Optional[_Context] = None) -> None:
    """Command-specific completeness checks."""
    ctx = ctx or _Context("", "<config>")
    need = {
        "simulate": ("source", "reference", "scan"),
        "spectrum": ("source", "dft"),
        "optimize": ("optimize",),
        "analytic": (),
    }[cfg.command]
    for name in need:
        if not getattr(cfg, name):
            raise ctx.error(name, f"command {cfg.command!r} requires a [{name}] section")
    if cfg.command == "simulate" and not cfg.pipeline:
        raise ctx.error("pipeline", "pipeline must contain at least one element")


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


# ---------------------------------------------------------------------------
# serialization

def _q(value: float, dim: str) -> str:
    return f"{float(value)!r} {_SI_UNIT[dim]}"


def _status_out(s, dim: str):
    if isinstance(s, optimizer.Fixed):
        return _q(s.value, dim)
    return {"lower": _q(s.lower, dim), "upper": _q(s.upper, dim)}


def _element_out(el) -> dict:
    if isinstance(el, elements.GDD):
        return {"type": "gdd", "gdd": _q(el.gdd, "gdd")}
    if isinstance(el, elements.QuadraticTimePhase):
        return {"type": "quadratic_time_phase", "focal_gdd": _q(1.0 / el.chirp_rate, "gdd")}
    if isinstance(el, elements.SinusoidalTimePhase):
        return {"type": "sinusoidal", "amplitude": _q(el.amplitude, "angle"),
                "frequency": _q(el.frequency, "frequency"), "offset": _q(el.offset, "time")}
    if isinstance(el, elements.Delay):
        return {"type": "delay", "delay": _q(el.delay, "time")}
    if isinstance(el, elements.GaussianFilter):
        return {"type": "filter", "fwhm": _q(el.fwhm, "angular_frequency"),
                "center_offset": _q(el.center_offset, "angular_frequency"),
                "peak_transmission": float(el.peak_transmission)}
    return {"type": "attenuator", "transmission": float(el.transmission)}


def config_to_dict(cfg: RunConfig) -> dict:
    out: dict[str, Any] = {"seed": cfg.seed, "convention": cfg.convention}
    if cfg.command is not None:
        out["command"] = cfg.command
    if cfg.out_dir is not None:
        out["out_dir"] = cfg.out_dir
    g = {"n_samples": cfg.grid.n_samples, "center_wavelength": _q(cfg.grid.center_wavelength, "length")}
    if cfg.grid.time_span is not None:
        g["time_span"] = _q(cfg.grid.time_span, "time")
    out["grid"] = g
    if isinstance(cfg.source, PhotonSpec):
        out["source"] = {"kind": "gaussian", "sigma": _q(cfg.source.sigma, "angular_frequency"),
                         "center_offset": _q(cfg.source.center_offset, "angular_frequency")}
    elif isinstance(cfg.source, JsaSourceSpec):
        s = cfg.source
        src = {"kind": "jsa", "pump_fwhm": _q(s.pump_fwhm, "angular_frequency"),
               "marginal_fwhm": _q(s.marginal_fwhm, "angular_frequency"), "pm_kind": s.pm_kind,
               "size": s.size}
        if s.idler_filter_fwhm is not None:
            src["idler_filter_fwhm"] = _q(s.idler_filter_fwhm, "angular_frequency")
        out["source"] = src
    if cfg.reference is not None:
        out["reference"] = {"sigma": _q(cfg.reference.sigma, "angular_frequency"),
                            "center_offset": _q(cfg.reference.center_offset, "angular_frequency")}
    if cfg.pipeline:
        out["pipeline"] = [_element_out(el) for el in cfg.pipeline]
    if cfg.scan is not None:
        s = cfg.scan
        sc = {"start": _q(s.start, "time"), "stop": _q(s.stop, "time"), "step": _q(s.step, "time"),
              "drift": float(s.drift), "bootstrap": s.bootstrap}
        if s.rate_scale is not None:
            sc["rate_scale"] = float(s.rate_scale)
        if s.singles_scale is not None:
            sc["singles_scale"] = float(s.singles_scale)
        out["scan"] = sc
    if cfg.dft is not None:
        out["dft"] = {"dispersion": _q(cfg.dft.dispersion, "dispersion"),
                      "jitter_rms": _q(cfg.dft.jitter_rms, "time"),
                      "bin_width": _q(cfg.dft.bin_width, "time"),
                      "instrument_factor": float(cfg.dft.instrument_factor)}
    if cfg.optimize:
        scen = []
        for job in cfg.optimize:
            sc = job.scenario
            scen.append({
                "name": sc.name,
                "input_sigma": _q(sc.input_sigma, "angular_frequency"),
                "target_sigma": _q(sc.target_sigma, "angular_frequency"),
                "gdd": _status_out(sc.gdd, "gdd"),
                "modulation_frequency": _status_out(sc.modulation_frequency, "frequency"),
                "amplitude": _status_out(sc.amplitude, "angle"),
                "offset": _status_out(sc.offset, "time"),
                "lens": sc.lens, "budget": job.budget, "scan_step": _q(sc.scan_step, "time"),
            })
        out["optimize"] = {"scenario": scen}
    if cfg.analytic is not None:
        a = cfg.analytic
        out["analytic"] = {"compressions": list(a.compressions), "curve_min": a.curve_min,
                           "curve_max": a.curve_max, "curve_points": a.curve_points,
                           "input_sigma": _q(a.input_sigma, "angular_frequency"),
                           "modulation_frequency": _q(a.modulation_frequency, "frequency")}
    return out


def serialize_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


# keys that do not describe the physics of a run
_NON_PHYSICAL = ("command", "seed", "out_dir", "convention")


def physics_hash(cfg: RunConfig) -> str:
    """SHA-256 over the canonical physical parameters (seed, paths and labels excluded)."""
    d = config_to_dict(cfg)
    for k in _NON_PHYSICAL:
        d.pop(k, None)
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
