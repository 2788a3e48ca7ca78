import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from silrender.geometry import signed_area

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_triangle(rng, lo=1.0, hi=11.0, min_area=1.0):
    while True:
        v = rng.uniform(lo, hi, (3, 2))
        if abs(signed_area(*v)) > min_area:
            return v
