"""Visibility-maximising search over sinusoidal time-lens parameters.

Free parameters are mapped onto the unit cube.  The search is a coarse grid
that zooms by an octave per level around the best point, followed by a bounded
Nelder-Mead simplex.  Every step is deterministic; grid points may be evaluated
on a thread pool (``TIMELENS_THREADS``) because each evaluation is a pure call.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
from scipy.optimize import minimize

from . import elements, hom, sigspace
from .errors import AliasingError, ConfigurationError, OptimizationError

PARAMETERS = ("gdd", "modulation_frequency", "amplitude", "offset")
SINUSOIDAL = "sinusoidal"
QUADRATIC = "quadratic"
LENSES = (SINUSOIDAL, QUADRATIC)

GRID_POINTS = 17
GRID_LEVELS = 3
SIMPLEX_XTOL = 1e-4
DEFAULT_CENTER_WAVELENGTH = 1551.5e-9


@dataclass(frozen=True)
class Fixed:
    value: float


@dataclass(frozen=True)
class Free:
    lower: float
    upper: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ConfigurationError("free-parameter bounds must be finite")
        if not self.lower < self.upper:
            raise ConfigurationError(f"free-parameter bounds must satisfy lower < upper, got "
                                     f"[{self.lower!r}, {self.upper!r}]")


Status = Union[Fixed, Free]


@dataclass(frozen=True)
class Scenario:
    """Input and target photons plus per-parameter fixed/free status.

    Bandwidths are amplitude sigmas in rad/s; ``gdd`` in s^2, ``modulation_frequency``
    in Hz, ``amplitude`` in rad, ``offset`` (pulse-centre-to-trough) in s.
    """

    name: str
    input_sigma: float
    target_sigma: float
    gdd: Status
    modulation_frequency: Status
    amplitude: Status
    offset: Status = Fixed(0.0)
    center_wavelength: float = DEFAULT_CENTER_WAVELENGTH
    convention: str = hom.MICHELSON
    n_samples: int = 2**15
    time_span: Optional[float] = None
    lens: str = SINUSOIDAL
    scan_step: float = 0.5e-12

    def __post_init__(self):
        if not (self.input_sigma > 0 and self.target_sigma > 0):
            raise ConfigurationError("photon bandwidths must be positive")
        if self.convention not in hom.CONVENTIONS:
            raise ConfigurationError(f"unknown visibility convention {self.convention!r}")
        if self.lens not in LENSES:
            raise ConfigurationError(f"unknown lens kind {self.lens!r}; expected one of {LENSES}")
        if not self.scan_step > 0:
            raise ConfigurationError("scan_step must be positive")
        for name in PARAMETERS:
            if not isinstance(getattr(self, name), (Fixed, Free)):
                raise ConfigurationError(f"parameter {name!r} must be Fixed or Free")
        amp = self.amplitude
        if (isinstance(amp, Fixed) and amp.value < 0) or (isinstance(amp, Free) and amp.lower < 0):
            raise ConfigurationError("modulation amplitude must be >= 0")
        fm = self.modulation_frequency
        if (isinstance(fm, Fixed) and not fm.value > 0) or (isinstance(fm, Free) and not fm.lower > 0):
            raise ConfigurationError("modulation frequency must be > 0")
        gdd = self.gdd
        if (isinstance(gdd, Fixed) and gdd.value == 0) or (isinstance(gdd, Free) and gdd.lower <= 0 <= gdd.upper):
            raise ConfigurationError("GDD must be non-zero (bounds may not straddle 0)")

    @classmethod
    def from_wavelength_fwhm(cls, name: str, input_fwhm: float, target_fwhm: float,
                             center_wavelength: float = DEFAULT_CENTER_WAVELENGTH, **kwargs) -> "Scenario":
        sa = sigspace.sigma_from_wavelength_fwhm(input_fwhm, center_wavelength)
        sb = sigspace.sigma_from_wavelength_fwhm(target_fwhm, center_wavelength)
        return cls(name, sa, sb, center_wavelength=center_wavelength, **kwargs)

    @property
    def free_names(self) -> tuple[str, ...]:
        return tuple(p for p in PARAMETERS if isinstance(getattr(self, p), Free))

    @property
    def compression(self) -> float:
        return self.input_sigma / self.target_sigma

    def largest_gdd(self) -> float:
        s = self.gdd
        return abs(s.value) if isinstance(s, Fixed) else max(abs(s.lower), abs(s.upper))

    @cached_property
    def grid(self) -> sigspace.Grid:
        span = self.time_span
        if span is None:
            fwhm = sigspace.FWHM_PER_SIGMA * self.input_sigma
            span = sigspace.default_time_span(self.largest_gdd(), fwhm)
        return sigspace.make_grid(self.n_samples, span, self.center_wavelength)

    @cached_property
    def input_photon(self) -> sigspace.SpectralAmplitude:
        return sigspace.gaussian_spectral_amplitude(self.grid, self.input_sigma)

    @cached_property
    def target_photon(self) -> sigspace.SpectralAmplitude:
        return sigspace.gaussian_spectral_amplitude(self.grid, self.target_sigma)

    def scan_half_width(self) -> float:
        """Half of a window six target-photon durations wide."""
        tl = sigspace.transform_limited_duration(sigspace.FWHM_PER_SIGMA * self.target_sigma)
        return 3.0 * tl

    def full_params(self, free_values=()) -> dict:
        """Parameter dict with fixed values filled in; ``free_values`` follow ``free_names``."""
        free_values = list(free_values)
        if len(free_values) != len(self.free_names):
            raise ConfigurationError(f"expected {len(self.free_names)} free values, got {len(free_values)}")
        out, it = {}, iter(free_values)
        for name in PARAMETERS:
            s = getattr(self, name)
            out[name] = s.value if isinstance(s, Fixed) else float(next(it))
        return out


class Evaluation(NamedTuple):
    params: dict
    visibility_depth: float
    visibility_michelson: float
    p_min: float
    delay_at_min: float
    output_fwhm: float
    multi_lobe: bool
    aliased: bool
    message: str = ""

    def visibility(self, convention: str) -> float:
        if convention == hom.DEPTH:
            return self.visibility_depth
        if convention == hom.MICHELSON:
            return self.visibility_michelson
        raise ConfigurationError(f"unknown visibility convention {convention!r}")


def converter_elements(params: dict, lens: str = SINUSOIDAL):
    """``[GDD, lens]``; the quadratic lens uses the sinusoid's trough curvature."""
    gdd, fm, amp, t0 = (params[p] for p in PARAMETERS)
    if lens == QUADRATIC:
        return [elements.GDD(gdd), elements.QuadraticTimePhase(amp * (2.0 * math.pi * fm) ** 2)]
    return [elements.GDD(gdd), elements.SinusoidalTimePhase(amp, fm, t0)]


def _check_physical(params: dict) -> None:
    if params["gdd"] == 0 or not math.isfinite(params["gdd"]):
        raise ConfigurationError("GDD must be finite and non-zero")
    if not params["modulation_frequency"] > 0:
        raise ConfigurationError("modulation frequency must be positive")
    if not params["amplitude"] >= 0:
        raise ConfigurationError("modulation amplitude must be >= 0")


def convert(params: dict, scenario: Scenario) -> sigspace.SpectralAmplitude:
    """Converted input photon (renormalised) for ``params``."""
    _check_physical(params)
    out, _ = elements.run_pipeline(scenario.input_photon, converter_elements(params, scenario.lens))
    return out.to_frequency().normalized()


def evaluate_visibility(params: dict, scenario: Scenario) -> Evaluation:
    """Both visibility conventions for one parameter set.

    ``p_min`` is the refined minimum of a 0.5 ps dip scan over six target
    durations; ``p_max`` is the distinguishable asymptote 1/2.  An aliasing
    failure yields visibility 0 with ``aliased=True`` instead of raising.
    """
    params = dict(params)
    try:
        out = convert(params, scenario)
    except AliasingError as exc:
        return Evaluation(params, 0.0, 0.0, 0.5, 0.0, float("nan"), False, True, str(exc))
    half = scenario.scan_half_width()
    scan = hom.dip_scan(out, scenario.target_photon, -half, half, scenario.scan_step)
    tau, p_min = hom.refine_minimum(out, scenario.target_photon, scan)
    width = sigspace.intensity_fwhm(out)
    return Evaluation(
        params,
        hom.visibility_from_extrema(p_min, 0.5, hom.DEPTH),
        hom.visibility_from_extrema(p_min, 0.5, hom.MICHELSON),
        p_min, tau, width.width, width.multi_lobe, False)


class TracePoint(NamedTuple):
    evaluation: int
    stage: str
    params: dict
    visibility: float
    best_visibility: float


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    scenario: Scenario
    best: Evaluation
    evaluations: int
    trace: tuple = field(repr=False)
    converged: bool

    @property
    def params(self) -> dict:
        return self.best.params

    @property
    def visibility(self) -> float:
        return self.best.visibility(self.scenario.convention)


def _thread_count() -> int:
    raw = os.environ.get("TIMELENS_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"TIMELENS_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def grid_levels(n_free: int, budget: int, points: int = GRID_POINTS, levels: int = GRID_LEVELS) -> int:
    """Points per dimension that keep the grid stage within 80% of ``budget``."""
    p = points
    while p > 3 and levels * p**n_free > 0.8 * budget:
        p -= 2
    return p


class _Search:
    """Book-keeping shared by both stages: budget, memo, trace and best point."""

    def __init__(self, scenario: Scenario, budget: int):
        self.scenario = scenario
        self.budget = budget
        self.names = scenario.free_names
        self.lower = np.array([getattr(scenario, n).lower for n in self.names])
        self.upper = np.array([getattr(scenario, n).upper for n in self.names])
        self.memo: dict[tuple, Evaluation] = {}
        self.trace: list[TracePoint] = []
        self.best: Optional[Evaluation] = None
        self.best_key = None
        self.count = 0

    def physical(self, u) -> tuple:
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        return tuple(float(x) for x in self.lower + u * (self.upper - self.lower))

    def key(self, ev: Evaluation, x: tuple):
        # total order: higher visibility first, then lexicographically smaller parameters
        return (-ev.visibility(self.scenario.convention), x)

    def remaining(self) -> int:
        return self.budget - self.count

    def _record(self, x: tuple, ev: Evaluation, stage: str) -> None:
        self.count += 1
        self.memo[x] = ev
        k = self.key(ev, x)
        if self.best_key is None or k < self.best_key:
            self.best, self.best_key = ev, k
        v = ev.visibility(self.scenario.convention)
        self.trace.append(TracePoint(self.count, stage, ev.params, v,
                                     self.best.visibility(self.scenario.convention)))

    def evaluate_many(self, points, stage: str, threads: int = 1) -> list[Evaluation]:
        xs = []
        for u in points:
            x = self.physical(u)
            if x not in self.memo and x not in xs:
                xs.append(x)
        xs = xs[: max(self.remaining(), 0)]
        params = [self.scenario.full_params(x) for x in xs]
        if threads > 1 and len(params) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                evs = list(pool.map(lambda p: evaluate_visibility(p, self.scenario), params))
        else:
            evs = [evaluate_visibility(p, self.scenario) for p in params]
        for x, ev in zip(xs, evs):
            self._record(x, ev, stage)
        return [self.memo[self.physical(u)] for u in points if self.physical(u) in self.memo]

    def objective(self, u) -> float:
        x = self.physical(u)
        if x not in self.memo:
            if self.remaining() <= 0:
                raise _BudgetExhausted
            self.evaluate_many([u], "simplex")
        return -self.memo[x].visibility(self.scenario.convention)

    def best_unit(self) -> np.ndarray:
        x = np.array([self.best.params[n] for n in self.names])
        return (x - self.lower) / (self.upper - self.lower)


class _BudgetExhausted(Exception):
    pass


def _seed_point(scenario: Scenario, search: _Search) -> np.ndarray:
    """Collimation design mapped into the free box (clipped)."""
    fm = scenario.modulation_frequency
    f_seed = fm.value if isinstance(fm, Fixed) else math.sqrt(fm.lower * fm.upper)
    design = None
    if scenario.input_sigma > scenario.target_sigma:
        design = elements.collimation_design(scenario.input_sigma, scenario.target_sigma, f_seed)
    values = {
        "gdd": design.gdd if design else 1.0 / (scenario.input_sigma * scenario.target_sigma),
        "modulation_frequency": f_seed,
        "amplitude": design.amplitude if design else 0.0,
        "offset": 0.0,
    }
    x = np.array([values[n] for n in search.names])
    return np.clip((x - search.lower) / (search.upper - search.lower), 0.0, 1.0)


def optimize(scenario: Scenario, budget: int = 2000, threads: Optional[int] = None) -> OptimizationResult:
    """Maximise the scenario's visibility convention over its free parameters."""
    if budget < 100:
        raise ConfigurationError(f"optimisation budget must be >= 100 evaluations, got {budget}")
    d = len(scenario.free_names)
    if d == 0:
        raise ConfigurationError(f"scenario {scenario.name!r} has no free parameter")
    threads = _thread_count() if threads is None else max(1, int(threads))
    search = _Search(scenario, budget)

    search.evaluate_many([_seed_point(scenario, search)], "seed")

    points = grid_levels(d, budget)
    width = 1.0
    center = np.full(d, 0.5)
    for level in range(GRID_LEVELS):
        if level:
            width /= 2.0
            center = np.clip(search.best_unit(), width / 2.0, 1.0 - width / 2.0)
        axes = [np.linspace(c - width / 2.0, c + width / 2.0, points) for c in center]
        mesh = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
        search.evaluate_many(mesh, f"grid{level + 1}", threads)
        if search.remaining() <= 0:
            break

    if all(ev.aliased for ev in search.memo.values()):
        raise OptimizationError(f"scenario {scenario.name!r}: every evaluated point hit the aliasing guard")

    converged = False
    if search.remaining() > d + 1:
        x0 = search.best_unit()
        step = width / (points - 1)
        simplex = [x0]
        for i in range(d):
            v = x0.copy()
            v[i] = v[i] + step if v[i] + step <= 1.0 else v[i] - step
            simplex.append(v)
        try:
            res = minimize(search.objective, x0, method="Nelder-Mead", bounds=[(0.0, 1.0)] * d,
                           options={"initial_simplex": np.array(simplex), "xatol": SIMPLEX_XTOL,
                                    "fatol": math.inf, "maxfev": 10 * budget, "adaptive": False})
            converged = bool(res.success)
        except _BudgetExhausted:
            converged = False

    best = search.best
    return OptimizationResult(scenario, best, search.count, tuple(search.trace), converged)


# ---------------------------------------------------------------------------
# the three published scenarios

PS2 = 1e-24
GHZ = 1e9
PI = math.pi


def table_s1_scenarios(n_samples: int = 2**15, convention: str = hom.MICHELSON,
                       input_fwhm: float = 2e-9, target_fwhm: float = 0.2e-9,
                       center_wavelength: float = DEFAULT_CENTER_WAVELENGTH) -> list[Scenario]:
    common = dict(n_samples=n_samples, convention=convention, center_wavelength=center_wavelength)
    gdd_box = Free(5 * PS2, 30 * PS2)
    fm_box = Free(1 * GHZ, 20 * GHZ)
    return [
        Scenario.from_wavelength_fwhm("1", input_fwhm, target_fwhm, gdd=gdd_box, modulation_frequency=fm_box,
                                      amplitude=Free(0.0, 80 * PI), **common),
        Scenario.from_wavelength_fwhm("2", input_fwhm, target_fwhm, gdd=gdd_box, modulation_frequency=fm_box,
                                      amplitude=Fixed(4 * PI), **common),
        Scenario.from_wavelength_fwhm("3", input_fwhm, target_fwhm, gdd=Fixed(22 * PS2),
                                      modulation_frequency=Fixed(10 * GHZ), amplitude=Free(0.0, 8 * PI),
                                      **common),
    ]


def default_budget(scenario: Scenario) -> int:
    d = len(scenario.free_names)
    return max(100, GRID_LEVELS * GRID_POINTS**d + 1 + 300 * d)


PUBLISHED = {"1": 0.9863, "2": 0.8726, "3": 0.6378}


def table_s1(n_samples: int = 2**15, convention: str = hom.MICHELSON, rows=("1", "2", "3"),
             threads: Optional[int] = None) -> list[OptimizationResult]:
    results = []
    for sc in table_s1_scenarios(n_samples, convention):
        if sc.name in rows:
            results.append(optimize(sc, default_budget(sc), threads))
    return results


def format_table(results) -> str:
    head = f"{'row':>3}  {'f_m (GHz)':>9}  {'A (pi rad)':>10}  {'GDD (ps2)':>9}  " \
           f"{'V michelson':>11}  {'V depth':>8}  {'target':>6}  {'evals':>6}"
    lines = [head, "-" * len(head)]
    for r in results:
        p = r.params
        target = PUBLISHED.get(r.scenario.name)
        lines.append(
            f"{r.scenario.name:>3}  {p['modulation_frequency'] / GHZ:9.2f}  {p['amplitude'] / PI:10.2f}  "
            f"{p['gdd'] / PS2:9.2f}  {100 * r.best.visibility_michelson:10.2f}%  "
            f"{100 * r.best.visibility_depth:7.2f}%  "
            f"{'' if target is None else f'{100 * target:.2f}%':>6}  {r.evaluations:6d}")
    return "\n".join(lines)


def with_ideal_lens(scenario: Scenario) -> Scenario:
    """Same scenario with the sinusoid replaced by its trough-curvature quadratic lens."""
    return replace(scenario, lens=QUADRATIC, name=f"{scenario.name}-ideal")
