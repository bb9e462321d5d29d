"""Bodies and Boundary Oracles"""

from bwalk.geometry.base import (
    ESCAPED,
    Body,
    BoundaryHit,
    Escaped,
    ExitResult,
    Ray,
    chord,
    contains,
    first_exit,
    march_and_bisect,
    reflect_direction,
    toroid_path_bound,
)
from bwalk.geometry.builder import build_body, load_descriptor, parse_descriptor
from bwalk.geometry.polytope import (
    Polytope,
    angle_triangle,
    axis_box,
    orthant,
    strip,
    unit_cube,
)
from bwalk.geometry.quadrics import Ball, Ellipsoid
from bwalk.geometry.special import ConcaveCusp, StandardSimplex, Toroid, TruncatedEllipse

__all__ = [
    "ESCAPED",
    "Ball",
    "Body",
    "BoundaryHit",
    "ConcaveCusp",
    "Ellipsoid",
    "Escaped",
    "ExitResult",
    "Polytope",
    "Ray",
    "StandardSimplex",
    "Toroid",
    "TruncatedEllipse",
    "angle_triangle",
    "axis_box",
    "build_body",
    "chord",
    "contains",
    "first_exit",
    "load_descriptor",
    "march_and_bisect",
    "orthant",
    "parse_descriptor",
    "reflect_direction",
    "strip",
    "toroid_path_bound",
    "unit_cube",
]
