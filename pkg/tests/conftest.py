"""
Shared fixtures for the bwalk test suite
"""

import os

os.environ.setdefault("ENVIRONMENT", "testing")

import math  # noqa: E402

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from bwalk.core.config import get_settings  # noqa: E402
from bwalk.core.rng import RandomStream  # noqa: E402
from bwalk.geometry import Ball, Ellipsoid, angle_triangle, orthant, unit_cube  # noqa: E402


@pytest.fixture
def settings():
    """Cached application settings"""
    return get_settings()


@pytest.fixture
def stream():
    """Fresh deterministic stream"""
    return RandomStream(12345)


@pytest.fixture
def square():
    """Unit square (0, 1)^2"""
    return unit_cube(2)


@pytest.fixture
def cube3():
    """Unit cube (0, 1)^3"""
    return unit_cube(3)


@pytest.fixture
def disk():
    """Unit disk centered at the origin"""
    return Ball([0.0, 0.0], 1.0)


@pytest.fixture
def ellipse():
    """Ellipse x1^2 / 4 + x2^2 < 1"""
    return Ellipsoid(np.diag([0.25, 1.0]))


@pytest.fixture
def quarter_angle():
    """Plane angle of opening pi/4 cut at x2 = 1"""
    return angle_triangle(math.pi / 4)


@pytest.fixture
def orthant3():
    """Positive orthant of R^3"""
    return orthant(3)
