import numpy as np
import pytest

from bphlife.model import TABLE1, build_model
from bphlife.simulation import simulate_paths

# Physiological ages of the 42-year-old husband and 35-year-old wife under
# the single-life aging chain; frozen in test_actuarial.
COUPLE_I, COUPLE_J = 100, 84
MC_SEED = 20240601
MC_PATHS = 1_000_000


@pytest.fixture(scope="session")
def table1_params():
    return TABLE1.replace(i=COUPLE_I, j=COUPLE_J)


@pytest.fixture(scope="session")
def table1_gen(table1_params):
    return build_model(table1_params)


@pytest.fixture(scope="session")
def mc_paths(table1_gen):
    return simulate_paths(table1_gen, MC_PATHS, MC_SEED)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
