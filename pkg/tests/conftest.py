import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from chfluct.model import ModelSpec
from chfluct.spectral import GridSpec

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_model():
    """Default model on a coarse grid, cheap enough for unit tests."""
    return ModelSpec(GridSpec(1, 16, 0.05, 200))
