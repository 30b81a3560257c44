import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_line_sample(rng, n, p=1):
    from rankme import Sample

    W = rng.uniform(-3, 9, size=(n, p))
    y = 1.0 + W @ np.linspace(2.0, 1.0, p) + rng.logistic(size=n)
    return Sample(W, y)
