import numpy as np
import pytest

from conformal_pi.testbed import NoiseProfile, make_splits


@pytest.fixture(scope="session")
def hetero_splits():
    """Criterion-1 data: slope 5, base 1, skew 0; 2000/1000/2000, seed 0."""
    return make_splits(2000, 1000, 2000, profile=NoiseProfile(1.0, 5.0, 0.0), seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS):
            terminalreporter.write_line(line)
