import numpy as np
import pytest

from acaf import TABLE9_THETA, simulate


@pytest.fixture(scope="session")
def truth():
    return TABLE9_THETA


@pytest.fixture(scope="session")
def sim1000(truth):
    return simulate(truth, n=1000, seed=11)


@pytest.fixture(scope="session")
def sim5000(truth):
    return simulate(truth, n=5000, seed=12)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)
