import numpy as np
import pytest

from elomov.model import DiscretizationScheme, ModelCoefficients

# Category frequencies over the 2009-10 .. 2013-14 EPL seasons.
EPL_FREQUENCIES = {
    "2": (0.277, 0.256, 0.467),
    "4:1": (0.127, 0.150, 0.256, 0.219, 0.248),
    "4:2": (0.051, 0.226, 0.256, 0.353, 0.114),
    "4:3": (0.018, 0.258, 0.256, 0.420, 0.047),
    "6:1,2": (0.051, 0.076, 0.150, 0.256, 0.219, 0.134, 0.114),
}

_acceptance_lines = []


def record_criterion(name, passed, detail=""):
    _acceptance_lines.append(f"[{'PASS' if passed else 'FAIL'}] {name}  {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def random_coefficients(rng, J, sigma=None, eta=None):
    """Valid coefficients with random alpha, ordered delta, eta and sigma."""
    na, nd = J // 2, (J + 1) // 2 - 1
    gaps = rng.uniform(0.2, 1.0, nd + 1)
    delta_half = -1.0 + np.cumsum(gaps / gaps.sum())[:-1]
    return ModelCoefficients.from_half(
        rng.uniform(-1.0, 1.5, na), delta_half, J,
        eta=rng.uniform(-0.3, 0.3) if eta is None else eta,
        sigma=rng.choice([1.0, 100.0, 400.0, 600.0]) if sigma is None else sigma,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def scheme4():
    return DiscretizationScheme((2,))


@pytest.fixture
def coeffs4():
    """J=4, threshold 2 coefficients from the EPL training frequencies."""
    from elomov.estimation import closed_form_coefficients

    return closed_form_coefficients(EPL_FREQUENCIES["4:2"])
