import numpy as np
import pytest

from kmp.data import split
from kmp.evaluation import make_synthetic
from kmp.optimizer import KMPConfig, fit

# populated by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def benchmark_split():
    """3-class / 2-view synthetic set, 300 train and 300 test samples.

    View 2 carries three times the noise of view 1.
    """
    ds = make_synthetic(classes=3, per_class=200, views=2, noise=(0.2, 0.6), seed=2024)
    return split(ds, 0.5, seed=7)


@pytest.fixture(scope="session")
def small_dataset():
    return make_synthetic(classes=3, per_class=20, views=2, noise=(0.15, 0.3), seed=3)


@pytest.fixture(scope="session")
def small_fit(small_dataset):
    cfg = KMPConfig(d=4, n_clusters=3, max_atoms=5, seed=1)
    return fit(small_dataset, cfg)
