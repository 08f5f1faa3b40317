import warnings

import numpy as np
import pytest
from hypothesis import settings

from mixedhenon.params import Params
from mixedhenon.radial import make_grid
from mixedhenon.solver import solve_ground_state

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def reference_params():
    return Params(N=3, p=2, q=4, s=1, gamma=1, alpha=0, beta=2)


@pytest.fixture(scope="session")
def reference_solution(reference_params):
    grid = make_grid(3, 15.0, 400)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return solve_ground_state(reference_params, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
