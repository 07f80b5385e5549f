import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "scorekit", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "scorekit"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def distinct_points(rng, n, scale=1.0):
    """n well-separated random points (minimum gap 1e-3 * scale)."""
    while True:
        x = rng.normal(scale=scale, size=n)
        if n < 2 or np.min(np.diff(np.sort(x))) > 1e-3 * scale:
            return x
