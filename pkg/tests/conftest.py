import numpy as np
import pytest

from acowa.data import SparseDataset


def random_dataset(rng, n, d, density=0.6, weights=False, noise=1.0):
    X = rng.standard_normal((n, d)) * (rng.random((n, d)) < density)
    y = np.where(X @ rng.standard_normal(d) + noise * rng.standard_normal(n) > 0, 1.0, -1.0)
    rw = rng.uniform(0.5, 2.0, n) if weights else None
    return SparseDataset.from_matrix(X, y, rw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_ds(rng):
    return random_dataset(rng, 30, 8)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
