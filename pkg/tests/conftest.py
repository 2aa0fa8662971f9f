import math

import pytest

from timelens import sigspace

LAM0 = 1551.5e-9


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def lam0():
    return LAM0


@pytest.fixture(scope="session")
def sigma_a():
    return sigspace.sigma_from_wavelength_fwhm(2e-9, LAM0)


@pytest.fixture(scope="session")
def sigma_b():
    return sigspace.sigma_from_wavelength_fwhm(0.2e-9, LAM0)


@pytest.fixture(scope="session")
def default_grid(sigma_a):
    """Default-size grid sized for the 22 ps^2 experimental dispersion."""
    span = sigspace.default_time_span(22e-24, sigspace.FWHM_PER_SIGMA * sigma_a)
    return sigspace.make_grid(2**15, span, LAM0)


@pytest.fixture(scope="session")
def small_grid():
    return sigspace.make_grid(4096, 400e-12, LAM0)
