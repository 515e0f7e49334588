import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hallmhd import spectral as sp

settings.register_profile(
    "default",
    max_examples=20,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture
def grid16():
    return sp.get_grid(16)


@pytest.fixture
def grid32():
    return sp.get_grid(32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rel(a, b):
    """Relative distance between two coefficient arrays."""
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.abs(b).max(), 1e-300)
    return float(np.abs(a - b).max() / scale)
