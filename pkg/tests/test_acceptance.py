"""End-to-end acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances."""
import math
import time

import numpy as np
import pytest

from timelens import biphoton, cli, elements, hom, optimizer as opt, sigspace
from timelens.cli import bundled_config
from timelens.elements import GaussianFilter, run_pipeline
from tests.acceptance_log import record

LAM0 = 1551.5e-9
PS = 1e-12
PS2 = opt.PS2
GHZ = opt.GHZ
PI = opt.PI


def ideal_pipeline_visibility(grid, sigma_in, compression):
    """Michelson visibility of the ideal-lens converted photon against its target, from a delay scan."""
    sb = sigma_in / compression
    d = elements.collimation_design(sigma_in, sb, 10 * GHZ)
    out, _ = run_pipeline(sigspace.gaussian_spectral_amplitude(grid, sigma_in), elements.ideal_converter(d.gdd))
    out = out.to_frequency()
    ref = sigspace.gaussian_spectral_amplitude(grid, sb)
    scan = hom.dip_scan(out, ref, -150 * PS, 150 * PS, 1 * PS)
    _, p_min = hom.refine_minimum(out, ref, scan)
    return hom.visibility_from_extrema(p_min, float(scan.probabilities.max()), hom.MICHELSON), out, ref


def test_criterion_1_analytic_limit(default_grid, sigma_a):
    start = time.perf_counter()
    closed = {f: hom.analytic_visibility_limit(f) for f in (2.0, 10.0)}
    numeric = {f: ideal_pipeline_visibility(default_grid, sigma_a, f)[0] for f in (2.0, 10.0)}
    runtime = time.perf_counter() - start
    ok = (abs(closed[2.0] - 0.942) < 5e-4 and abs(closed[10.0] - 0.9975) < 5e-5
          and all(abs(numeric[f] - closed[f]) < 1e-3 for f in closed) and runtime < 5)
    record(1, ok, f"V(2)={closed[2.0]:.4f} V(10)={closed[10.0]:.5f} closed form; numeric "
                  f"{numeric[2.0]:.5f}/{numeric[10.0]:.5f} (tol 1e-3)", runtime)
    assert ok


def test_criterion_2_row3():
    sc = {s.name: s for s in opt.table_s1_scenarios()}["3"]
    start = time.perf_counter()
    res = opt.optimize(sc, opt.default_budget(sc))
    runtime = time.perf_counter() - start
    amp = res.params["amplitude"] / PI
    matches = [c for c in (hom.MICHELSON, hom.DEPTH) if abs(res.best.visibility(c) - 0.6378) <= 0.005]
    ok = abs(amp - 4.27) <= 0.2 and bool(matches) and runtime < 120
    record(2, ok, f"row 3 A*={amp:.3f}pi V_michelson={res.best.visibility_michelson:.4f} "
                  f"V_depth={res.best.visibility_depth:.4f} target 0.6378+-0.005, "
                  f"matched convention: {','.join(matches) or 'none'}", runtime)
    assert ok


@pytest.mark.slow
def test_criterion_3_row2():
    sc = {s.name: s for s in opt.table_s1_scenarios()}["2"]
    start = time.perf_counter()
    res = opt.optimize(sc, opt.default_budget(sc))
    runtime = time.perf_counter() - start
    fm, gdd = res.params["modulation_frequency"] / GHZ, res.params["gdd"] / PS2
    v = res.best.visibility_michelson
    ok = abs(v - 0.8726) <= 0.010 and runtime < 600
    record(3, ok, f"row 2 V_michelson={v:.4f} (depth {res.best.visibility_depth:.4f}) target 0.8726+-0.010; "
                  f"f_m={fm:.2f} GHz (published 14.29), GDD={gdd:.2f} ps2 (published 11.29)", runtime)
    assert ok


@pytest.mark.slow
def test_criterion_4_row1():
    sc = {s.name: s for s in opt.table_s1_scenarios()}["1"]
    start = time.perf_counter()
    res = opt.optimize(sc, opt.default_budget(sc))
    runtime = time.perf_counter() - start
    v = res.best.visibility_michelson
    ok = abs(v - 0.9863) <= 0.007 and runtime < 900
    p = res.params
    record(4, ok, f"row 1 V_michelson={v:.4f} (depth {res.best.visibility_depth:.4f}) target 0.9863+-0.007 "
                  f"at f_m={p['modulation_frequency'] / GHZ:.2f} GHz, GDD={p['gdd'] / PS2:.2f} ps2, "
                  f"A={p['amplitude'] / PI:.1f}pi", runtime)
    assert ok


def test_criterion_5_required_dispersion(sigma_a, sigma_b):
    d = elements.collimation_design(sigma_a, sigma_b, 10 * GHZ)
    gdd = d.gdd / PS2
    ok = abs(gdd - 11.3) <= 0.1
    record(5, ok, f"collimation GDD={gdd:.3f} ps2 target 11.3+-0.1")
    assert ok


def test_criterion_6_unconverted_baseline(default_grid, sigma_a):
    sb = sigma_a / 10
    closed = hom.mismatch_visibility(sigma_a, sb)
    a = sigspace.gaussian_spectral_amplitude(default_grid, sigma_a)
    b = sigspace.gaussian_spectral_amplitude(default_grid, sb)
    numeric = hom.visibility_from_extrema(hom.coincidence_probability(a, b, 0.0), 0.5, hom.DEPTH)
    ok = abs(closed - 0.198) <= 0.002 and abs(numeric - closed) < 1e-6
    record(6, ok, f"mismatch depth visibility {closed:.5f} closed form, numeric diff {abs(numeric - closed):.1e}")
    assert ok


def test_criterion_7_teleportation():
    gain = hom.teleportation_gain(0.632, 0.206, 1.0, 0.029)
    ok = abs(gain - 4.5) <= 0.1
    record(7, ok, f"figure of merit {gain:.3f} vs ~4.5 (+-0.1)")
    assert ok


def test_criterion_8_oracle_equivalence(default_grid, sigma_a):
    errs, dps = [], []
    for f in (1.0, 2.0, 5.0, 10.0):
        sb = sigma_a / f
        # GDD 1/(sigma_a sigma_b) with a matched lens; F = 1 is included (design helper covers F > 1 only)
        out, _ = run_pipeline(sigspace.gaussian_spectral_amplitude(default_grid, sigma_a),
                              elements.ideal_converter(1 / (sigma_a * sb)))
        out = out.to_frequency()
        errs.append(sigspace.relative_l2_distance(out, elements.ideal_converted_amplitude(sigma_a, sb, default_grid)))
        ref = sigspace.gaussian_spectral_amplitude(default_grid, sb)
        dps.append(abs(hom.coincidence_probability(out, ref, 0.0) - hom.ideal_p_min(f)))
    ok = max(errs) < 1e-6 and max(dps) < 1e-6
    record(8, ok, f"F=1,2,5,10 max rel L2 {max(errs):.1e}, max |p_min - closed form| {max(dps):.1e} (tol 1e-6)")
    assert ok


def _property_checks(tmp_path, default_grid, sigma_a):
    rng = np.random.default_rng(12345)
    checks = {}
    small = sigspace.make_grid(4096, 400e-12, LAM0)

    norm_errs, rt_errs = [], []
    for _ in range(20):
        s = rng.uniform(1e11, 1e12)
        a = sigspace.gaussian_spectral_amplitude(small, s, rng.uniform(-s, s))
        chain = [elements.GDD(rng.uniform(-5, 5) * PS2),
                 elements.SinusoidalTimePhase(rng.uniform(0, 3) * PI, rng.uniform(1, 10) * GHZ, 0.0),
                 elements.QuadraticTimePhase(rng.uniform(-0.5, 0.5) / PS2), elements.Delay(rng.uniform(-20, 20) * PS)]
        out, _ = run_pipeline(a, chain)
        norm_errs.append(abs(out.norm2() - a.norm2()))
        rt_errs.append(sigspace.relative_l2_distance(a.to_time().to_frequency(), a, False))
    checks["norm conservation"] = max(norm_errs) < 1e-12
    checks["transform round trip"] = max(rt_errs) < 1e-12

    a = sigspace.gaussian_spectral_amplitude(small, 8e11)
    b = sigspace.gaussian_spectral_amplitude(small, 2e11, 1e11)
    taus = rng.uniform(-60, 60, 40) * PS
    p = np.array([hom.coincidence_probability(a, b, t) for t in taus])
    p_neg = np.array([hom.coincidence_probability(a, b, -t) for t in taus])
    b_sym = sigspace.gaussian_spectral_amplitude(small, 2e11)
    p_sym = np.array([hom.coincidence_probability(a, b_sym, t) - hom.coincidence_probability(a, b_sym, -t)
                      for t in taus])
    checks["p in [0, 1/2] and symmetric"] = (bool(np.all((p >= -1e-15) & (p <= 0.5 + 1e-15)))
                                             and bool(np.all((p_neg >= -1e-15) & (p_neg <= 0.5 + 1e-15)))
                                             and float(np.max(np.abs(p_sym))) < 1e-12)

    v = [hom.analytic_visibility_limit(f) for f in np.geomspace(1, 1e3, 40)]
    checks["V(F) monotone to 1"] = all(x < y for x, y in zip(v, v[1:])) and 1 - v[-1] < 1e-6

    pump = sigspace.convert_units(0.3e-9, "wavelength_fwhm_to_angular", LAM0 / 2)
    marginal = sigspace.convert_units(2e-9, "wavelength_fwhm_to_angular", LAM0)
    filt = sigspace.convert_units(0.2e-9, "wavelength_fwhm_to_angular", LAM0)
    jsa = biphoton.make_jsa(pump, "gaussian", biphoton.calibrate_pm_bandwidth(pump, marginal))
    purities = [biphoton.heralded_signal(biphoton.apply_idler_filter(jsa, GaussianFilter(w))[0])[1]
                for w in filt * np.array([8.0, 4.0, 2.0, 1.0, 0.5])]
    heralded = purities[3]
    checks[f"heralded purity >= 0.99 (got {heralded:.5f})"] = heralded >= 0.99
    checks["purity monotone in filter narrowing"] = all(x < y for x, y in zip(purities, purities[1:]))

    sa = 1e12
    scan = hom.dip_scan(sigspace.gaussian_spectral_amplitude(small, sa),
                        sigspace.gaussian_spectral_amplitude(small, sa / 3), -40 * PS, 40 * PS, 1 * PS)
    lo = hom.bootstrap_visibility_uncertainty(hom.synthesize_counts(scan, 200, seed=5), 200, seed=9)
    hi = hom.bootstrap_visibility_uncertainty(hom.synthesize_counts(scan, 20000, seed=5), 200, seed=9)
    ratio = lo.std_error / hi.std_error
    checks[f"bootstrap scaling x100 counts (ratio {ratio:.2f})"] = 7 <= ratio <= 13

    cfg = tmp_path / "heralded.toml"
    cfg.write_text(bundled_config("heralded.toml").replace("bootstrap = 200", "bootstrap = 100"))
    runs = [tmp_path / "r1", tmp_path / "r2"]
    codes = [cli.main(["simulate", str(cfg), "--out", str(r), "--grid-n", "4096"]) for r in runs]
    same = all(c == 0 for c in codes) and all(
        p.read_bytes() == (runs[1] / p.name).read_bytes() for p in runs[0].iterdir() if p.name != "manifest.json")
    checks["byte-level determinism of seeded runs"] = same
    return checks


def test_criterion_9_property_suites(tmp_path, default_grid, sigma_a):
    start = time.perf_counter()
    checks = _property_checks(tmp_path, default_grid, sigma_a)
    runtime = time.perf_counter() - start
    failed = [k for k, v in checks.items() if not v]
    ok = not failed
    record(9, ok, f"{len(checks) - len(failed)}/{len(checks)} properties hold"
                  + (f"; failing: {'; '.join(failed)}" if failed else ""), runtime)
    assert ok, failed


def test_criterion_10_experimental_dip_width(default_grid, sigma_a, sigma_b):
    sc = {s.name: s for s in opt.table_s1_scenarios()}["3"]
    out = opt.convert(dict(gdd=22 * PS2, modulation_frequency=10 * GHZ, amplitude=4.27 * PI, offset=0.0), sc)
    ref = sigspace.gaussian_spectral_amplitude(out.grid, sigma_b)
    fit = hom.fit_gaussian_dip(hom.dip_scan(out, ref, -40 * PS, 40 * PS, 0.5 * PS))
    scale = math.sqrt(2) * 17.7
    fwhm = fit.fwhm / PS
    ok = scale / 1.5 <= fwhm <= scale * 1.5 and not fit.no_significant_dip
    record(10, ok, f"dip fit FWHM {fwhm:.2f} ps vs sqrt(2)*17.7={scale:.2f} ps (factor 1.5 window)")
    assert ok
