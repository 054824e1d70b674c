import numpy as np
import pytest

from wallwave.geometry import DomainWall, RectificationMap, trace_level_set


@pytest.fixture(scope="session")
def flat_wall():
    return DomainWall.flat_y((-4.0, 4.0, -2.0, 2.0))


@pytest.fixture(scope="session")
def flat_curve(flat_wall):
    return trace_level_set(flat_wall, (0.0, 0.0), step=0.02)


@pytest.fixture(scope="session")
def circle_wall():
    return DomainWall.circle(1.0)


@pytest.fixture(scope="session")
def circle_curve(circle_wall):
    return trace_level_set(circle_wall, (1.0, 0.0), step=0.005)


@pytest.fixture(scope="session")
def circle_map(circle_curve):
    return RectificationMap(circle_curve)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
