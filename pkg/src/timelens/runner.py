"""Execute a validated :class:`~timelens.config.RunConfig` and write its artifacts.

Each command writes into ``out_dir`` (which the caller stages and publishes);
the functions return a small dict of headline numbers that also goes into the
manifest.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import biphoton, elements, hom, optimizer, sigspace, spectrometer
from .config import AnalyticSpec, JsaSourceSpec, PhotonSpec, RunConfig
from .errors import UnsupportedError
from .outputs import (CURVE_COLUMNS, DESIGN_COLUMNS, DIP_COLUMNS, COUNT_COLUMNS, OPTIMIZER_COLUMNS,
                      SPECTRA_COLUMNS, SUMMARY_COLUMNS, TRACE_COLUMNS, svg_line_chart, write_csv)

PS = 1e-12
NM = 1e-9
SPECTRUM_POINTS = 1201


def _largest_gdd(pipeline) -> float:
    return max((abs(el.gdd) for el in pipeline if isinstance(el, elements.GDD)), default=0.0)


def _source_fwhm(src) -> float:
    if isinstance(src, PhotonSpec):
        return sigspace.FWHM_PER_SIGMA * src.sigma
    return src.marginal_fwhm


def build_grid(cfg: RunConfig) -> sigspace.Grid:
    span = cfg.grid.time_span
    if span is None:
        fwhms = [_source_fwhm(cfg.source)]
        if cfg.reference is not None:
            fwhms.append(sigspace.FWHM_PER_SIGMA * cfg.reference.sigma)
        span = sigspace.default_time_span(_largest_gdd(cfg.pipeline), max(fwhms))
        if cfg.scan is not None:
            # the scan must not wrap around the window either
            span = max(span, 4.0 * max(abs(cfg.scan.start), abs(cfg.scan.stop)))
    return sigspace.make_grid(cfg.grid.n_samples, span, cfg.grid.center_wavelength)


def build_source(src, grid: sigspace.Grid):
    """Input photon on ``grid`` plus source diagnostics."""
    if isinstance(src, PhotonSpec):
        return sigspace.gaussian_spectral_amplitude(grid, src.sigma, src.center_offset), {}
    pump_fwhm = src.pump_fwhm
    bw = biphoton.calibrate_pm_bandwidth(pump_fwhm, src.marginal_fwhm, src.pm_kind, src.size)
    jsa = biphoton.make_jsa(pump_fwhm, src.pm_kind, bw, src.size)
    info = {"pm_bandwidth_rad_s": bw, "unfiltered_purity": biphoton.purity(jsa)}
    if src.idler_filter_fwhm is not None:
        jsa, eff = biphoton.apply_idler_filter(jsa, elements.GaussianFilter(src.idler_filter_fwhm))
        info["heralding_efficiency"] = eff
    amp, pur = biphoton.heralded_signal(jsa, grid)
    info["heralded_purity"] = pur
    return amp, info


def _wavelength_axis(grid: sigspace.Grid, photons) -> np.ndarray:
    lam0 = grid.center_wavelength
    half = 0.0
    for a in photons:
        lo, hi = sigspace.significant_extent(a.to_frequency(), 1e-8)
        half = max(half, abs(lo), abs(hi))
    dl = sigspace.convert_units(2.0 * half, "angular_fwhm_to_wavelength", lam0)
    return lam0 + np.linspace(-0.6 * dl, 0.6 * dl, SPECTRUM_POINTS)


def _spectrum_rows(series) -> list:
    rows = []
    for which, lam, inten in series:
        peak = float(np.max(inten))
        for l_, v in zip(lam, inten):
            rows.append((l_ / NM, v / peak, which))
    return rows


def _write_spectra(out: Path, grid, named_photons, dft_series=None) -> list:
    lam = _wavelength_axis(grid, [a for _, a in named_photons])
    series = [(name, lam, spectrometer.spectrum_on_wavelength(a, lam)) for name, a in named_photons]
    if dft_series is not None:
        series.append(("dft", dft_series.wavelength, dft_series.intensity))
    write_csv(out / "spectra.csv", SPECTRA_COLUMNS, _spectrum_rows(series))
    svg_line_chart(out / "spectra.svg",
                   [(n, l_ / NM, i / np.max(i)) for n, l_, i in series],
                   "Spectra", "wavelength (nm)", "intensity (peak-normalised)")
    return series


def _summary(out: Path, metrics: dict) -> None:
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, list(metrics.items()))


# ---------------------------------------------------------------------------

def run_simulate(cfg: RunConfig, out: Path) -> dict:
    grid = build_grid(cfg)
    a, info = build_source(cfg.source, grid)
    converted, transmission = elements.run_pipeline(a, cfg.pipeline)
    converted = converted.to_frequency().normalized()
    ref = sigspace.gaussian_spectral_amplitude(grid, cfg.reference.sigma, cfg.reference.center_offset)

    s = cfg.scan
    scan = hom.dip_scan(converted, ref, s.start, s.stop, s.step)
    tau_min, p_min = hom.refine_minimum(converted, ref, scan)
    metrics = {
        "visibility_extrema_michelson": hom.visibility_from_extrema(p_min, 0.5, hom.MICHELSON),
        "visibility_extrema_depth": hom.visibility_from_extrema(p_min, 0.5, hom.DEPTH),
        "p_min": p_min,
        "delay_at_min_ps": tau_min / PS,
        "transmission": transmission,
    }
    fit_scan = scan
    if s.rate_scale is not None:
        counted = hom.synthesize_counts(scan, s.rate_scale, cfg.seed, s.singles_scale, s.drift)
        fit_scan = hom.normalize_counts(counted)
    fit = hom.fit_gaussian_dip(fit_scan)
    metrics.update({
        "visibility_fit_depth": fit.visibility_depth,
        "visibility_fit_michelson": fit.visibility_michelson,
        "fit_center_ps": fit.center / PS,
        "fit_width_ps": fit.width / PS,
        "fit_fwhm_ps": fit.fwhm / PS,
        "fit_baseline": fit.baseline,
        "fit_depth": fit.depth,
        "no_significant_dip": fit.no_significant_dip,
    })
    if s.bootstrap:
        boot = hom.bootstrap_visibility_uncertainty(fit_scan, s.bootstrap, cfg.seed)
        metrics["visibility_fit_depth_std_error"] = boot.std_error
        metrics["bootstrap_failures"] = boot.n_failed
    width = sigspace.intensity_fwhm(converted)
    metrics["converted_fwhm_nm"] = sigspace.convert_units(
        width.width, "angular_fwhm_to_wavelength", grid.center_wavelength) / NM
    metrics["converted_multi_lobe"] = width.multi_lobe
    metrics.update(info)
    metrics["convention"] = cfg.convention
    metrics["visibility"] = metrics[f"visibility_extrema_{cfg.convention}"]

    model = fit.model(fit_scan.delays)
    if fit_scan.coincidences is not None:
        p = np.where(fit_scan.valid, fit_scan.probabilities, np.nan)
        rows = zip(fit_scan.delays / PS, p, model, fit_scan.coincidences, fit_scan.singles_a, fit_scan.singles_b)
        header = DIP_COLUMNS + COUNT_COLUMNS
    else:
        rows = zip(fit_scan.delays / PS, fit_scan.probabilities, model)
        header = DIP_COLUMNS
    write_csv(out / "dip.csv", header, list(rows))
    svg_line_chart(out / "dip.svg", [("p", fit_scan.delays / PS, fit_scan.probabilities),
                                     ("Gaussian fit", fit_scan.delays / PS, model)],
                   "HOM dip", "delay (ps)", "coincidence probability")

    dft = None
    if cfg.dft is not None:
        dft = spectrometer.simulate_dft_spectrum(converted, cfg.dft)
        metrics["dft_undersampled"] = dft.undersampled
    _write_spectra(out, grid, [("input", a), ("converted", converted), ("reference", ref)], dft)
    _summary(out, metrics)
    return metrics


def run_spectrum(cfg: RunConfig, out: Path) -> dict:
    grid = build_grid(cfg)
    a, info = build_source(cfg.source, grid)
    named = [("input", a)]
    final = a.to_frequency()
    metrics = {}
    if cfg.pipeline:
        final, transmission = elements.run_pipeline(a, cfg.pipeline)
        final = final.to_frequency().normalized()
        named.append(("converted", final))
        metrics["transmission"] = transmission
    if cfg.reference is not None:
        named.append(("reference", sigspace.gaussian_spectral_amplitude(
            grid, cfg.reference.sigma, cfg.reference.center_offset)))
    dft = spectrometer.simulate_dft_spectrum(final, cfg.dft)
    lam0 = grid.center_wavelength
    exact = sigspace.intensity_fwhm(final)
    measured = sigspace.profile_fwhm(dft.wavelength, dft.intensity)
    metrics.update({
        "nominal_resolution_nm": spectrometer.nominal_resolution(cfg.dft) / NM,
        "instrument_factor": cfg.dft.instrument_factor,
        "exact_fwhm_nm": sigspace.convert_units(exact.width, "angular_fwhm_to_wavelength", lam0) / NM,
        "exact_multi_lobe": exact.multi_lobe,
        "dft_fwhm_nm": measured.width / NM,
        "dft_multi_lobe": measured.multi_lobe,
        "dft_undersampled": dft.undersampled,
    })
    metrics.update(info)
    _write_spectra(out, grid, named, dft)
    _summary(out, metrics)
    return metrics


def _trace_rows(result: optimizer.OptimizationResult) -> list:
    rows = []
    for tp in result.trace:
        p = tp.params
        rows.append((tp.evaluation, tp.stage, p["gdd"] / optimizer.PS2, p["modulation_frequency"] / optimizer.GHZ,
                     p["amplitude"] / math.pi, p["offset"] / PS, tp.visibility, tp.best_visibility))
    return rows


def _thread_count() -> int:
    return optimizer._thread_count()


def run_optimize(cfg: RunConfig, out: Path) -> dict:
    jobs = cfg.optimize
    threads = _thread_count()
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            results = list(pool.map(lambda j: optimizer.optimize(j.scenario, j.budget, 1), jobs))
    else:
        results = [optimizer.optimize(j.scenario, j.budget, threads) for j in jobs]
    rows = []
    headline = {}
    for r in results:
        p = r.params
        rows.append((r.scenario.name, p["modulation_frequency"] / optimizer.GHZ, p["amplitude"] / math.pi,
                     p["gdd"] / optimizer.PS2, r.best.visibility_michelson, r.best.visibility_depth, r.evaluations))
        sub = out / f"scenario-{r.scenario.name}"
        sub.mkdir()
        trace = _trace_rows(r)
        write_csv(sub / "trace.csv", TRACE_COLUMNS, trace)
        svg_line_chart(sub / "trace.svg",
                       [("best", [t[0] for t in trace], [t[7] for t in trace]),
                        ("evaluated", [t[0] for t in trace], [t[6] for t in trace])],
                       f"Scenario {r.scenario.name} convergence", "evaluation", f"visibility ({cfg.convention})")
        headline[r.scenario.name] = {"visibility_michelson": r.best.visibility_michelson,
                                     "visibility_depth": r.best.visibility_depth,
                                     "f_m_GHz": p["modulation_frequency"] / optimizer.GHZ,
                                     "A_pi": p["amplitude"] / math.pi, "gdd_ps2": p["gdd"] / optimizer.PS2,
                                     "evaluations": r.evaluations, "converged": r.converged}
    write_csv(out / "optimizer.csv", OPTIMIZER_COLUMNS, rows)
    (out / "table.txt").write_text(optimizer.format_table(results) + "\n", encoding="utf-8")
    return headline


def design_row(compression: float, spec: AnalyticSpec, lam0: float) -> tuple:
    sa = spec.input_sigma
    sb = sa / compression
    vm = hom.analytic_visibility_limit(compression)
    vd = hom.visibility_from_extrema(hom.ideal_p_min(compression), 0.5, hom.DEPTH)
    try:
        d = elements.collimation_design(sa, sb, spec.modulation_frequency)
        gdd, amp = d.gdd / optimizer.PS2, d.amplitude / math.pi
    except UnsupportedError:
        gdd = amp = float("nan")
    fwhm_nm = sigspace.convert_units(sigspace.FWHM_PER_SIGMA * sb, "angular_fwhm_to_wavelength", lam0) / NM
    return (compression, vm, vd, gdd, amp, spec.modulation_frequency / optimizer.GHZ, fwhm_nm)


def run_analytic(cfg: RunConfig, out: Path) -> dict:
    spec = cfg.analytic or AnalyticSpec()
    lam0 = cfg.grid.center_wavelength
    f = np.geomspace(spec.curve_min, spec.curve_max, spec.curve_points)
    curve = [(x, hom.analytic_visibility_limit(x), hom.visibility_from_extrema(hom.ideal_p_min(x), 0.5, hom.DEPTH),
              hom.ideal_p_min(x)) for x in f]
    write_csv(out / "visibility_curve.csv", CURVE_COLUMNS, curve)
    svg_line_chart(out / "visibility_curve.svg",
                   [("michelson", np.log10(f), [c[1] for c in curve]),
                    ("depth", np.log10(f), [c[2] for c in curve])],
                   "Visibility limit vs compression", "log10(compression factor)", "visibility")
    rows = [design_row(c, spec, lam0) for c in spec.compressions]
    write_csv(out / "design.csv", DESIGN_COLUMNS, rows)
    return {f"{r[0]:g}": dict(zip(DESIGN_COLUMNS[1:], r[1:])) for r in rows}


RUNNERS = {"simulate": run_simulate, "spectrum": run_spectrum, "optimize": run_optimize,
           "analytic": run_analytic}


def run(cfg: RunConfig, out: Path) -> dict:
    return RUNNERS[cfg.command](cfg, Path(out))
