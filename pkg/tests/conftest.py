import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fairalloc.model import CostModel, Scenario

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("quick", max_examples=15, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def two_user():
    """U1 = -x^2 + 3x, U2 = -x^2 + 6x with price equal to the load."""
    return Scenario.from_arrays([2.0, 2.0], [3.0, 6.0], CostModel(1.0, 0.0))


@pytest.fixture
def single_user():
    return Scenario.from_arrays([2.0], [4.0], CostModel(1.0, 0.0))


def random_scenario(seed: int, n_min: int = 2, n_max: int = 6, random_cost: bool = True):
    g = np.random.default_rng(seed)
    n = int(g.integers(n_min, n_max + 1))
    cost = CostModel(0.2 + 1.8 * g.random(), g.random()) if random_cost else CostModel()
    return Scenario.from_arrays(0.5 + 2.5 * g.random(n), 1.0 + 9.0 * g.random(n), cost)


@pytest.fixture
def report(capsys):
    """Print one line straight to the terminal, bypassing capture."""
    def emit(line: str):
        with capsys.disabled():
            print(f"\n{line}", flush=True)
    return emit
