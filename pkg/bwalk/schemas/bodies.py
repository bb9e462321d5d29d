"""
Body descriptor schemas.

A BodyDescriptor is the declarative, JSON-serializable definition of a
sampling region. The "type" field discriminates the variants:

    {"type": "polytope", "A": [[1, 0], [-1, 0]], "b": [1, 1]}
    {"type": "unit_cube", "n": 3}
    {"type": "toroid", "n": 10, "r": 0.3333333333333333}
"""

from typing import Annotated, List, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator


class _Descriptor(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class PolytopeDescriptor(_Descriptor):
    """Open polytope {x : (a_i, x) < b_i}"""

    type: Literal["polytope"] = "polytope"
    A: List[List[float]] = Field(..., description="m x n constraint matrix")
    b: List[float] = Field(..., description="Right-hand side, length m")

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"type": "polytope", "A": [[1, 0], [-1, 0], [0, 1], [0, -1]],
                        "b": [1, 1, 1, 1]}
        }
    )


class BallDescriptor(_Descriptor):
    """Euclidean ball"""

    type: Literal["ball"] = "ball"
    center: List[float] = Field(..., description="Ball center")
    radius: float = Field(..., gt=0, description="Ball radius")


class EllipsoidDescriptor(_Descriptor):
    """Centered ellipsoid {x : x^T A x < 1}"""

    type: Literal["ellipsoid"] = "ellipsoid"
    A: List[List[float]] = Field(..., description="Symmetric positive-definite matrix")


class AxisBoxDescriptor(_Descriptor):
    """Axis-aligned box lower < x < upper"""

    type: Literal["axis_box"] = "axis_box"
    lower: List[float]
    upper: List[float]


class UnitCubeDescriptor(_Descriptor):
    """Unit cube 0 < x < 1"""

    type: Literal["unit_cube"] = "unit_cube"
    n: int = Field(..., ge=1)


class StandardSimplexDescriptor(_Descriptor):
    """Standard simplex x_i > 0, sum x_i = 1, embedded in R^(n+1)"""

    type: Literal["standard_simplex"] = "standard_simplex"
    n: int = Field(..., ge=1)


class ToroidDescriptor(_Descriptor):
    """Ball of radius r swept around the unit circle of the (x1, x2)-plane"""

    type: Literal["toroid"] = "toroid"
    n: int = Field(..., ge=2)
    r: float

    @field_validator("r")
    @classmethod
    def validate_r(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("toroid radius r must lie in (0, 1)")
        return v


class StripDescriptor(_Descriptor):
    """Strip 0 < x2 < 1, |x1| < M"""

    type: Literal["strip"] = "strip"
    M: float = Field(..., gt=0)


class OrthantDescriptor(_Descriptor):
    """Positive orthant x > 0 (unbounded)"""

    type: Literal["orthant"] = "orthant"
    n: int = Field(..., ge=1)


class AngleTriangleDescriptor(_Descriptor):
    """Plane angle of opening alpha with escape line x2 = 1"""

    type: Literal["angle_triangle"] = "angle_triangle"
    alpha: float

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v: float) -> float:
        if not 0.0 < v < 3.141592653589793:
            raise ValueError("alpha must lie in (0, pi)")
        return v


class ConcaveCuspDescriptor(_Descriptor):
    """Cusp -x1^4 < x2 < x1^4, 0 < x1 < 1"""

    type: Literal["concave_cusp"] = "concave_cusp"


class TruncatedEllipseDescriptor(_Descriptor):
    """Ellipse x1^2/4 + x2^2 < 1 cut at x1 < sqrt(3) -/+ |x2|"""

    type: Literal["truncated_ellipse"] = "truncated_ellipse"
    variant: Literal["convex", "nonconvex"] = "convex"


BodyDescriptor = Annotated[
    Union[
        PolytopeDescriptor,
        BallDescriptor,
        EllipsoidDescriptor,
        AxisBoxDescriptor,
        UnitCubeDescriptor,
        StandardSimplexDescriptor,
        ToroidDescriptor,
        StripDescriptor,
        OrthantDescriptor,
        AngleTriangleDescriptor,
        ConcaveCuspDescriptor,
        TruncatedEllipseDescriptor,
    ],
    Field(discriminator="type"),
]

body_descriptor_adapter: TypeAdapter = TypeAdapter(BodyDescriptor)

BODY_TYPES = [
    "polytope", "ball", "ellipsoid", "axis_box", "unit_cube", "standard_simplex",
    "toroid", "strip", "orthant", "angle_triangle", "concave_cusp", "truncated_ellipse",
]
