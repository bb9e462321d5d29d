"""
Body construction from descriptors.

Turns a validated BodyDescriptor (or its JSON form) into an immutable Body
with the configured oracle tolerances.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

from pydantic import ValidationError

from bwalk.core.config import get_settings
from bwalk.core.exceptions import BodyBuildError, InvalidDimensionError
from bwalk.geometry.base import Body
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
from bwalk.schemas.bodies import (
    AngleTriangleDescriptor,
    AxisBoxDescriptor,
    BallDescriptor,
    BodyDescriptor,
    ConcaveCuspDescriptor,
    EllipsoidDescriptor,
    OrthantDescriptor,
    PolytopeDescriptor,
    StandardSimplexDescriptor,
    StripDescriptor,
    ToroidDescriptor,
    TruncatedEllipseDescriptor,
    UnitCubeDescriptor,
    body_descriptor_adapter,
)

logger = logging.getLogger(__name__)


def parse_descriptor(data: Union[BodyDescriptor, Dict[str, Any], str]) -> BodyDescriptor:
    """Validate a descriptor given as a model, a mapping or a JSON string"""
    if isinstance(data, (dict, str)):
        try:
            if isinstance(data, str):
                return body_descriptor_adapter.validate_json(data)
            return body_descriptor_adapter.validate_python(data)
        except ValidationError as e:
            logger.error(f"Invalid body descriptor: {e.error_count()} error(s)")
            raise BodyBuildError(f"invalid body descriptor: {e}") from e
    return data


def load_descriptor(path: Union[str, Path]) -> BodyDescriptor:
    """Read a descriptor from a JSON file"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        logger.error(f"Cannot read body file {path}: {e}")
        raise BodyBuildError(f"cannot read body file {path}: {e}") from e
    try:
        json.loads(text)
    except json.JSONDecodeError as e:
        raise BodyBuildError(f"body file {path} is not valid JSON: {e}") from e
    return parse_descriptor(text)


def build_body(descriptor: Union[BodyDescriptor, Dict[str, Any], str]) -> Body:
    """
    Build a validated immutable body.

    Raises
    ------
    BodyBuildError
        Descriptor validation failure, empty interior, or non positive-definite
        ellipsoid matrix.
    InvalidDimensionError
        Inconsistent dimensions inside the descriptor.
    """
    descriptor = parse_descriptor(descriptor)
    sampler = get_settings().sampler
    tolerances = {"eps_fwd_rel": sampler.EPS_FWD_REL, "eps_vertex": sampler.EPS_VERTEX}

    if isinstance(descriptor, PolytopeDescriptor):
        widths = {len(row) for row in descriptor.A}
        if len(widths) != 1:
            raise InvalidDimensionError("polytope rows have different lengths")
        body: Body = Polytope(descriptor.A, descriptor.b, **tolerances)
    elif isinstance(descriptor, BallDescriptor):
        body = Ball(descriptor.center, descriptor.radius, **tolerances)
    elif isinstance(descriptor, EllipsoidDescriptor):
        body = Ellipsoid(descriptor.A, **tolerances)
    elif isinstance(descriptor, AxisBoxDescriptor):
        body = axis_box(descriptor.lower, descriptor.upper)
    elif isinstance(descriptor, UnitCubeDescriptor):
        body = unit_cube(descriptor.n)
    elif isinstance(descriptor, StandardSimplexDescriptor):
        body = StandardSimplex(descriptor.n, **tolerances)
    elif isinstance(descriptor, ToroidDescriptor):
        body = Toroid(descriptor.n, descriptor.r, **tolerances)
    elif isinstance(descriptor, StripDescriptor):
        body = strip(descriptor.M)
    elif isinstance(descriptor, OrthantDescriptor):
        body = orthant(descriptor.n)
    elif isinstance(descriptor, AngleTriangleDescriptor):
        body = angle_triangle(descriptor.alpha)
    elif isinstance(descriptor, ConcaveCuspDescriptor):
        body = ConcaveCusp(**tolerances)
    elif isinstance(descriptor, TruncatedEllipseDescriptor):
        body = TruncatedEllipse(descriptor.variant, **tolerances)
    else:
        raise BodyBuildError(f"unsupported descriptor {type(descriptor).__name__}")

    logger.debug(f"Built {body!r} from {descriptor.type} descriptor")
    return body
