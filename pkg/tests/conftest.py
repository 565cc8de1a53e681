import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_innovation(rng, depth):
    side = 1 << depth
    return rng.uniform(-1.0, 1.0, (side, side))
