import numpy as np
import pytest

from distnn.core import Dataset


def random_dataset(rng, n, d, scale=1.0, grid=None):
    """Gaussian features (optionally snapped to a grid to force ties) with random labels."""
    X = rng.standard_normal((n, d)) * scale
    if grid:
        X = np.round(X * grid) / grid
    y = rng.integers(0, 2, n)
    return Dataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one "PASS/FAIL criterion: detail" line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
