import numpy as np
import pytest

from python.normal_form import NormalFormParams, affine_fixed_point
from python.pws_core import border_collision_map


@pytest.fixture
def corner_map():
    """Normal form with the (-4, 3) saddle on the left, at the corner tau_R = -0.6, delta_R = 1.35."""
    return border_collision_map(2.0, 0.75, -0.6, 1.35, 1.0)


@pytest.fixture
def corner_saddle(corner_map):
    return affine_fixed_point(corner_map, 'L')


@pytest.fixture
def locked_params():
    """Parameters inside the period-2 tongue."""
    return NormalFormParams(0.5, 0.05, -1.6, 0.05, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
