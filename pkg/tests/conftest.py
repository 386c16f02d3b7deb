import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lpmlat.geometry import StationArray

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def square():
    """Stations (10,0),(0,10),(-10,0),(0,-10), reference at the origin."""
    return StationArray([[10.0, 0.0], [0.0, 10.0], [-10.0, 0.0], [0.0, -10.0]], [0.0, 0.0])


def regular_polygon(n, radius=10.0, rot=0.0):
    a = rot + 2 * np.pi * np.arange(n) / n
    return StationArray(np.column_stack([radius * np.cos(a), radius * np.sin(a)]), [0.0, 0.0])
