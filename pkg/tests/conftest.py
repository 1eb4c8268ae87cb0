import numpy as np
import pytest

from fpcloak.graph import OverlapGraph
from fpcloak.locator import build_radio_map
from fpcloak.world import generate_field, random_walk, scan_many

from helpers import SENS, TAU


@pytest.fixture(scope="session")
def small_field():
    return generate_field(40, (150.0, 150.0), "clustered", 3, path_loss_exponent=3.0, cluster_size=6.0)


@pytest.fixture(scope="session")
def collected(small_field):
    g = OverlapGraph()
    walk = random_walk(small_field, (75.0, 75.0), 1500, 4.0, 11)
    for fp in scan_many(small_field, walk.steps, SENS):
        g.scsoa_update(fp.observations, TAU)
    return g.recompute_coefficients()


@pytest.fixture(scope="session")
def small_map(small_field):
    return build_radio_map(small_field, 5.0, SENS)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
