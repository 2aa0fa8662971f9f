import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from timelens import biphoton, hom, sigspace
from timelens.elements import GaussianFilter
from timelens.errors import AliasingError, ConfigurationError
from timelens.sigspace import FWHM_PER_SIGMA

LAM0 = 1551.5e-9
PUMP = sigspace.convert_units(0.3e-9, "wavelength_fwhm_to_angular", LAM0 / 2)
MARGINAL = sigspace.convert_units(2e-9, "wavelength_fwhm_to_angular", LAM0)
FILTER = sigspace.convert_units(0.2e-9, "wavelength_fwhm_to_angular", LAM0)


def gaussian_quadratic_form(pump_fwhm, pm_fwhm, idler_filter_fwhm=None):
    """Coefficients of |f| = exp(-(a s^2 + 2 c s i + b i^2) / 2) for the Gaussian model."""
    p = 1 / (pump_fwhm / FWHM_PER_SIGMA) ** 2
    v = 1 / (pm_fwhm / FWHM_PER_SIGMA) ** 2
    a, b, c = p + v, p + v, p - v
    if idler_filter_fwhm is not None:
        # sqrt of exp(-4 ln2 i^2 / w^2)
        b += 4 * math.log(2) / idler_filter_fwhm**2
    return a, b, c


def gaussian_purity(a, b, c):
    return math.sqrt(1 - c * c / (a * b))


@pytest.fixture(scope="module")
def calibrated():
    bw = biphoton.calibrate_pm_bandwidth(PUMP, MARGINAL)
    return bw, biphoton.make_jsa(PUMP, "gaussian", bw)


def test_pump_width_at_half_wavelength():
    # 0.3 nm at 775.75 nm corresponds to 1.2 nm-equivalent at the signal wavelength
    assert PUMP == pytest.approx(4 * sigspace.convert_units(0.3e-9, "wavelength_fwhm_to_angular", LAM0), rel=1e-12)


def test_calibration_matches_closed_form(calibrated):
    bw, jsa = calibrated
    assert bw == pytest.approx(math.sqrt(4 * MARGINAL**2 - PUMP**2), rel=1e-3)
    assert biphoton.marginal_fwhm(jsa) == pytest.approx(MARGINAL, rel=1e-6)


def test_jsa_normalized_and_symmetric(calibrated):
    _, jsa = calibrated
    assert jsa.norm2() == pytest.approx(1.0, abs=1e-9)
    assert np.max(np.abs(np.abs(jsa.values) - np.abs(jsa.values.T))) < 1e-9 * np.abs(jsa.values).max()


def test_jsa_anticorrelated(calibrated):
    _, jsa = calibrated
    inten = np.abs(jsa.values) ** 2
    s, i = np.meshgrid(jsa.signal_omega, jsa.idler_omega, indexing="ij")
    cov = np.sum(inten * s * i) / np.sum(inten)
    assert cov < 0


def test_make_jsa_errors():
    with pytest.raises(ConfigurationError):
        biphoton.make_jsa(0.0, "gaussian", 1e12)
    with pytest.raises(ConfigurationError):
        biphoton.make_jsa(1e12, "hermite", 1e12)
    with pytest.raises(AliasingError, match="half-width"):
        biphoton.make_jsa(1e12, "gaussian", 1e12, half_width=5e11)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 20.0))
def test_purity_closed_form(ratio):
    pump = 1e12
    jsa = biphoton.make_jsa(pump, "gaussian", pump * ratio, n=256)
    sp, sv = pump / FWHM_PER_SIGMA, pump * ratio / FWHM_PER_SIGMA
    oracle = 2 * sp * sv / (sp**2 + sv**2)
    assert biphoton.purity(jsa) == pytest.approx(oracle, abs=1e-6)


def test_purity_two_oracles():
    jsa = biphoton.make_jsa(PUMP, "gaussian", 3 * PUMP, n=128)
    f = jsa.values
    hs, hi = jsa.signal_step, jsa.idler_step
    rho = f @ f.conj().T * hi  # rho(s, s')
    direct = float(np.real(np.trace(rho @ rho)) * hs * hs)
    assert biphoton.purity(jsa) == pytest.approx(direct, abs=1e-9)
    weights, _, _ = biphoton.schmidt_decomposition(jsa)
    assert weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_unfiltered_purity_below_one(calibrated):
    bw, jsa = calibrated
    p = biphoton.purity(jsa)
    assert p < 1
    assert p == pytest.approx(gaussian_purity(*gaussian_quadratic_form(PUMP, bw)), abs=1e-6)


def test_filtered_purity_matches_closed_form(calibrated):
    bw, jsa = calibrated
    filtered, _ = biphoton.apply_idler_filter(jsa, GaussianFilter(FILTER))
    _, p = biphoton.heralded_signal(filtered)
    assert p == pytest.approx(gaussian_purity(*gaussian_quadratic_form(PUMP, bw, FILTER)), abs=1e-6)


def test_filtered_purity_threshold(calibrated):
    _, jsa = calibrated
    filtered, _ = biphoton.apply_idler_filter(jsa, GaussianFilter(FILTER))
    _, p = biphoton.heralded_signal(filtered)
    assert p >= 0.99, p


def test_filter_ladder_monotone(calibrated):
    _, jsa = calibrated
    widths = FILTER * np.array([8.0, 4.0, 2.0, 1.0, 0.5])
    purities = [biphoton.heralded_signal(biphoton.apply_idler_filter(jsa, GaussianFilter(w))[0])[1]
                for w in widths]
    assert all(x < y for x, y in zip(purities, purities[1:])), purities


def test_heralding_efficiency(calibrated):
    _, jsa = calibrated
    out, eff = biphoton.apply_idler_filter(jsa, GaussianFilter(FILTER, peak_transmission=0.8))
    assert 0 < eff < 0.8
    assert out.norm2() == pytest.approx(eff, rel=1e-12)
    same, eff1 = biphoton.apply_idler_filter(jsa, GaussianFilter(1e30))
    assert eff1 == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(same.values - jsa.values)) < 1e-12 * np.abs(jsa.values).max()


def test_narrow_filter_gives_pump_limited_signal(calibrated):
    bw, jsa = calibrated
    a, _, _ = gaussian_quadratic_form(PUMP, bw)
    limit = 2 * math.sqrt(math.log(2) / a)  # idler pinned at 0: |f(s, 0)|^2 = exp(-a s^2)
    errs = []
    for w in FILTER * np.array([1.0, 0.3, 0.1, 0.03]):
        filtered, _ = biphoton.apply_idler_filter(jsa, GaussianFilter(w))
        errs.append(abs(biphoton.marginal_fwhm(filtered) - limit) / limit)
    assert all(x > y for x, y in zip(errs, errs[1:])), errs
    assert errs[-1] < 0.01
    assert limit < 1.1 * PUMP


def test_sinc_side_lobes():
    jsa = biphoton.make_jsa(PUMP, "sinc", 4 * PUMP, half_width=16 * PUMP)
    w = sigspace.profile_fwhm(jsa.signal_omega, jsa.signal_marginal())
    assert w.multi_lobe
    gauss = biphoton.make_jsa(PUMP, "gaussian", 4 * PUMP)
    assert not sigspace.profile_fwhm(gauss.signal_omega, gauss.signal_marginal()).multi_lobe


def test_separable_heralding_exact():
    bw = 1e12
    jsa = biphoton.make_jsa(bw, "gaussian", bw, n=256)  # equal widths factorize in (s, i)
    amp, p = biphoton.heralded_signal(jsa)
    assert p == pytest.approx(1.0, abs=1e-9)
    k = np.searchsorted(amp.grid.omega, jsa.signal_omega)
    assert np.array_equal(amp.grid.omega[k], jsa.signal_omega)
    marg = np.sqrt(jsa.signal_marginal())
    assert np.max(np.abs(np.abs(amp.values[k]) - marg)) < 1e-9 * marg.max()


def test_heralded_onto_pulse_grid(calibrated, default_grid):
    _, jsa = calibrated
    filtered, _ = biphoton.apply_idler_filter(jsa, GaussianFilter(FILTER))
    amp, _ = biphoton.heralded_signal(filtered, default_grid)
    assert amp.grid == default_grid
    assert amp.norm2() == pytest.approx(1.0, abs=1e-9)
    width = sigspace.intensity_fwhm(amp).width
    assert width == pytest.approx(biphoton.marginal_fwhm(filtered), rel=0.02)


def test_heralded_zero_norm():
    jsa = biphoton.make_jsa(1e12, "gaussian", 1e12, n=64)
    with pytest.raises(ConfigurationError):
        biphoton.heralded_signal(jsa.with_values(np.zeros_like(jsa.values)))


def test_biphoton_limits(calibrated):
    _, jsa = calibrated
    assert biphoton.biphoton_coincidence(jsa, 0.0) == pytest.approx(0.0, abs=1e-9)
    assert biphoton.biphoton_coincidence(jsa, 2e-9) == pytest.approx(0.5, abs=1e-3)
    taus = np.linspace(-20e-12, 20e-12, 21)
    p = biphoton.biphoton_coincidence(jsa, taus)
    assert np.all((p >= 0) & (p <= 1))
    assert np.max(np.abs(p - p[::-1])) < 1e-12


def test_biphoton_reduces_to_single_photon_hom():
    bw = 8e11
    jsa = biphoton.make_jsa(bw, "gaussian", bw, n=256)
    amp, _ = biphoton.heralded_signal(jsa)
    for tau in (0.0, 1e-12, 3.7e-12, -6e-12):
        assert biphoton.biphoton_coincidence(jsa, tau) == pytest.approx(
            hom.coincidence_probability(amp, amp, tau), abs=1e-9)


def test_biphoton_requires_square_axes():
    jsa = biphoton.make_jsa(1e12, "gaussian", 1e12, n=64)
    skew = biphoton.JointSpectralAmplitude(jsa.signal_omega, jsa.idler_omega * 1.1, jsa.values,
                                           jsa.pump_fwhm, jsa.pm_kind, jsa.pm_bandwidth)
    with pytest.raises(ConfigurationError):
        biphoton.biphoton_coincidence(skew, 0.0)
