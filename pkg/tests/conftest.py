import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kdvbbm.spectral import Field, make_grid

settings.register_profile(
    "lab", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("lab")


def random_real_field(grid, seed, band=None, decay=1.0):
    """Real band-limited field with power-law coefficients, for oracles."""
    rng = np.random.default_rng(seed)
    k = np.arange(1, grid.N // 2)
    if band is not None:
        k = k[grid.dxi * k <= band]
    coeffs = np.zeros(grid.N, dtype=complex)
    values = (rng.standard_normal(len(k)) + 1j * rng.standard_normal(len(k)))
    values *= (1.0 + grid.dxi * k) ** (-decay)
    coeffs[k] = values
    coeffs[-k] = np.conj(values)
    coeffs[0] = rng.standard_normal()
    return Field(grid, spectrum=coeffs, real=True)


@pytest.fixture
def grid2pi():
    return make_grid(2 * math.pi, 64)


@pytest.fixture
def wide_grid():
    return make_grid(64 * math.pi, 1024)


ACCEPTANCE_LINES = {}


def record_criterion(number, title, passed, detail):
    """Store the one-line verdict printed at the end of the session."""
    ACCEPTANCE_LINES[number] = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
