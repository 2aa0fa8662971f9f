import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from timelens import elements, sigspace
from timelens.elements import (GDD, Attenuator, Delay, GaussianFilter, QuadraticTimePhase, SinusoidalTimePhase,
                               run_pipeline)
from timelens.errors import AliasingError, ConfigurationError, UnsupportedError

LAM0 = 1551.5e-9
PS2 = 1e-24


def nm_to_rad(fwhm_nm):
    return sigspace.convert_units(fwhm_nm * 1e-9, "wavelength_fwhm_to_angular", LAM0)


def test_gdd_chirped_gaussian_duration(default_grid, sigma_a):
    a = sigspace.gaussian_spectral_amplitude(default_grid, sigma_a)
    out = elements.apply_gdd(a, 22 * PS2)
    width = sigspace.intensity_fwhm(out.to_time()).width
    # closed form: |E(t)| ~ exp(-t^2 / (2 T^2)), T^2 = 1/sigma^2 + (phi sigma)^2
    T = math.sqrt(1 / sigma_a**2 + (22 * PS2 * sigma_a) ** 2)
    oracle = 2 * math.sqrt(math.log(2)) * T
    assert oracle == pytest.approx(34.5e-12, abs=0.05e-12)
    assert width == pytest.approx(oracle, abs=default_grid.time_step)


def test_gdd_zero_and_inverse(small_grid):
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    assert sigspace.relative_l2_distance(elements.apply_gdd(a, 0.0), a, False) == 0.0
    back = elements.apply_gdd(elements.apply_gdd(a, 3 * PS2), -3 * PS2)
    assert sigspace.relative_l2_distance(back, a, False) < 1e-12


def test_gdd_aliasing_guard_names_span():
    g = sigspace.make_grid(1024, 50e-12, LAM0)
    a = sigspace.gaussian_spectral_amplitude(g, sigspace.sigma_from_wavelength_fwhm(2e-9, LAM0))
    with pytest.raises(AliasingError, match="time_span") as info:
        elements.apply_gdd(a, 22 * PS2)
    assert info.value.required_span > g.time_span


def test_ideal_lens_compresses_to_target(default_grid, sigma_a, sigma_b):
    d = elements.collimation_design(sigma_a, sigma_b, 10e9)
    a = sigspace.gaussian_spectral_amplitude(default_grid, sigma_a)
    out, _ = run_pipeline(a, elements.ideal_converter(d.gdd))
    width = sigspace.intensity_fwhm(out.to_frequency()).width
    assert width == pytest.approx(sigspace.FWHM_PER_SIGMA * sigma_b, abs=default_grid.angular_frequency_step)
    oracle = elements.ideal_converted_amplitude(sigma_a, sigma_b, default_grid)
    mag = np.abs(out.to_frequency().values)
    assert sigspace.relative_l2_distance(mag, np.abs(oracle.values), False) < 1e-6


@pytest.mark.parametrize("compression", [1.5, 2.0, 5.0, 10.0])
def test_ideal_converter_matches_closed_form(default_grid, sigma_a, compression):
    sb = sigma_a / compression
    d = elements.collimation_design(sigma_a, sb, 10e9)
    a = sigspace.gaussian_spectral_amplitude(default_grid, sigma_a)
    out, t = run_pipeline(a, elements.ideal_converter(d.gdd))
    assert t == 1.0
    oracle = elements.ideal_converted_amplitude(sigma_a, sb, default_grid)
    assert sigspace.relative_l2_distance(out.to_frequency(), oracle) < 1e-6


def test_quadratic_phase_zero_and_inverse(small_grid):
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    assert sigspace.relative_l2_distance(elements.apply_quadratic_time_phase(a, 0.0).to_frequency(), a, False) < 1e-15
    k = 1 / (2 * PS2)
    back = elements.apply_quadratic_time_phase(elements.apply_quadratic_time_phase(a, k), -k)
    assert sigspace.relative_l2_distance(back.to_frequency(), a, False) < 1e-12


def test_quadratic_phase_aliasing_guard(small_grid):
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    with pytest.raises(AliasingError, match="Nyquist"):
        elements.apply_quadratic_time_phase(elements.apply_gdd(a, 5 * PS2), 1e27)


def _chirped(grid, sigma, gdd):
    return elements.apply_gdd(sigspace.gaussian_spectral_amplitude(grid, sigma), gdd)


def test_sinusoid_small_angle_limit(sigma_a):
    g = sigspace.make_grid(2**15, 2e-9, LAM0)
    gdd = 1 * PS2
    a = _chirped(g, sigma_a, gdd)
    k = 1 / gdd
    f = 1e9
    amp = k / (2 * math.pi * f) ** 2
    sin = elements.apply_sinusoidal_time_phase(a, amp, f)
    quad = elements.apply_quadratic_time_phase(a, k)
    # cosine trough: -A cos(x) = -A + A x^2/2 - ..., so the two differ by a global phase only at leading order
    assert sigspace.relative_l2_distance(sin, quad) < 1e-3


def test_sinusoid_converges_to_quadratic_monotonically(sigma_a):
    g = sigspace.make_grid(2**15, 2e-9, LAM0)
    gdd = 2 * PS2
    a = _chirped(g, sigma_a, gdd)
    k = 1 / gdd
    quad = elements.apply_quadratic_time_phase(a, k)
    dists = []
    for f in (8e9, 4e9, 2e9, 1e9):  # pulse duration x f_m shrinks by a factor 8
        lens = SinusoidalTimePhase(k / (2 * math.pi * f) ** 2, f)
        assert lens.chirp_rate == pytest.approx(k, rel=1e-12)
        dists.append(sigspace.relative_l2_distance(lens.apply(a), quad))
    assert all(x > y for x, y in zip(dists, dists[1:])), dists
    assert dists[-1] < 1e-3


def test_sinusoid_zero_amplitude_is_identity(small_grid):
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    out = elements.apply_sinusoidal_time_phase(a, 0.0, 10e9)
    assert sigspace.relative_l2_distance(out.to_frequency(), a, False) < 1e-15


def test_experimental_converter_side_lobes(default_grid, sigma_a):
    a = sigspace.gaussian_spectral_amplitude(default_grid, sigma_a)
    out, t = run_pipeline(a, [GDD(22 * PS2), SinusoidalTimePhase(4.27 * math.pi, 10e9, 0.0)])
    assert t == 1.0
    w = sigspace.intensity_fwhm(out.to_frequency())
    width_nm = sigspace.convert_units(w.width, "angular_fwhm_to_wavelength", LAM0) * 1e9
    assert w.multi_lobe
    assert width_nm == pytest.approx(0.2, abs=0.03)


def test_delay_inverse(small_grid):
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    back = elements.apply_delay(elements.apply_delay(a, 7.3e-12), -7.3e-12)
    assert sigspace.relative_l2_distance(back, a, False) < 1e-12


def test_delay_shifts_envelope(small_grid):
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    out = elements.apply_delay(a, 20 * small_grid.time_step).to_time()
    # exp(-i Omega tau) with exp(-i Omega t) synthesis moves the envelope to t = -tau
    assert np.argmax(np.abs(out.values)) - small_grid.n_samples // 2 == -20


def test_filter_transmission_closed_form(default_grid, sigma_a):
    a = sigspace.gaussian_spectral_amplitude(default_grid, sigma_a)
    w = nm_to_rad(0.2)
    out, t = run_pipeline(a, [GaussianFilter(w)])
    oracle = 1 / math.sqrt(1 + 4 * math.log(2) * sigma_a**2 / w**2)
    assert oracle == pytest.approx(0.0995, abs=5e-5)
    assert t == pytest.approx(oracle, rel=1e-9)
    assert out.norm2() == pytest.approx(t, rel=1e-12)


def test_filters_compose(small_grid):
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    f = 5e11
    twice = elements.apply_filter(elements.apply_filter(a, f), f)
    once = elements.apply_filter(a, f / math.sqrt(2))
    assert sigspace.relative_l2_distance(twice, once, False) < 1e-12


def test_filter_peak_and_offset(small_grid):
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    out = elements.apply_filter(a, 1e20, peak_transmission=0.5)
    assert out.norm2() == pytest.approx(0.5, rel=1e-12)
    shifted = elements.apply_filter(a, 3e11, center_offset=4e11)
    assert np.sum(small_grid.omega * np.abs(shifted.values) ** 2) > 0


@pytest.mark.parametrize("bad", [0.0, -0.1, 1.5])
def test_transmission_range(bad, small_grid):
    with pytest.raises(ConfigurationError):
        Attenuator(bad)
    with pytest.raises(ConfigurationError):
        GaussianFilter(1e11, peak_transmission=bad)
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    with pytest.raises(ConfigurationError):
        elements.apply_attenuator(a, bad)


def test_attenuator_pipeline_transmission(small_grid):
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    out, t = run_pipeline(a, [Attenuator(0.206)])
    assert t == pytest.approx(0.206, rel=1e-12)
    assert out.norm2() == pytest.approx(0.206, rel=1e-12)


def test_pipeline_transmission_is_product(small_grid):
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    out, t = run_pipeline(a, [Attenuator(0.5), GDD(1 * PS2), GaussianFilter(1e20, peak_transmission=0.4)])
    assert t == pytest.approx(0.2, rel=1e-9)
    assert out.norm2() == pytest.approx(t, rel=1e-12)


def test_pipeline_identity_and_errors(small_grid):
    a = sigspace.gaussian_spectral_amplitude(small_grid, 6e11)
    out, t = run_pipeline(a, [Delay(0.0)])
    assert t == 1.0 and sigspace.relative_l2_distance(out, a, False) == 0.0
    with pytest.raises(ConfigurationError, match="pipeline must contain at least one element"):
        run_pipeline(a, [])
    with pytest.raises(AliasingError) as info:
        run_pipeline(a, [Delay(1e-12), GDD(1e-20)])
    assert info.value.element_index == 1
    assert "element 1 (GDD)" in str(info.value)


def test_collimation_design_reference_numbers(sigma_a, sigma_b):
    d = elements.collimation_design(sigma_a, sigma_b, 10e9)
    assert d.gdd / PS2 == pytest.approx(11.3, abs=0.1)
    assert d.gdd * d.chirp_rate == pytest.approx(1.0, rel=1e-12)
    assert d.compression == pytest.approx(10.0, rel=1e-12)
    low = elements.collimation_design(sigma_a, sigma_b, 3.49e9)
    assert low.amplitude / math.pi == pytest.approx(58.4, abs=1.0)


@given(st.floats(1e10, 1e13), st.floats(1.01, 100.0), st.floats(1e8, 1e11))
def test_collimation_condition(sa, ratio, fm):
    d = elements.collimation_design(sa, sa / ratio, fm)
    assert d.gdd * d.chirp_rate == pytest.approx(1.0, rel=1e-12)
    assert d.amplitude * (2 * math.pi * fm) ** 2 == pytest.approx(d.chirp_rate, rel=1e-12)


def test_collimation_rejects_expansion():
    with pytest.raises(UnsupportedError):
        elements.collimation_design(1e11, 2e11, 10e9)
    with pytest.raises(UnsupportedError):
        elements.collimation_design(1e11, 1e11, 10e9)
    with pytest.raises(ConfigurationError):
        elements.collimation_design(2e11, 1e11, 0.0)


def test_ideal_converted_amplitude_form(small_grid):
    s = 3e11
    out = elements.ideal_converted_amplitude(s, s, small_grid)
    gauss = sigspace.gaussian_spectral_amplitude(small_grid, s)
    assert np.allclose(np.abs(out.values), np.abs(gauss.values), rtol=0, atol=1e-15)
    w = small_grid.omega
    core = np.abs(w) < 3 * s
    phase = np.angle(out.values[core] / gauss.values[core])
    expected = np.angle(np.exp(-1j * w[core] ** 2 / (2 * s * s)))
    assert np.allclose(phase, expected, atol=1e-9)


PHASE_ELEMENTS = st.one_of(
    st.builds(GDD, st.floats(-5e-24, 5e-24)),
    st.builds(QuadraticTimePhase, st.floats(-2e23, 2e23)),
    st.builds(SinusoidalTimePhase, st.floats(0, 30), st.floats(1e9, 2e10), st.floats(-20e-12, 20e-12)),
    st.builds(Delay, st.floats(-50e-12, 50e-12)),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(PHASE_ELEMENTS, min_size=1, max_size=4))
def test_phase_only_elements_conserve_norm(chain):
    g = sigspace.make_grid(4096, 400e-12, LAM0)
    a = sigspace.gaussian_spectral_amplitude(g, 6e11)
    try:
        out, t = run_pipeline(a, chain)
    except AliasingError:
        return
    assert t == 1.0
    assert abs(out.norm2() - a.norm2()) < 1e-12
