import numpy as np
import pytest

from magspec import geometry


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def martinet():
    return geometry.martinet_model(mu=100.0, h=0.005)
