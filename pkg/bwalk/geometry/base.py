"""
Body interface and Boundary Oracle primitives.

A Body is an immutable open region of R^n. Its Boundary Oracle answers
first-exit ray queries: the smallest t > eps_fwd at which origin + t * d
leaves the region, together with the inward unit normal at that point and
a flag telling whether the point sits on a nonsmooth part of the boundary.

Design Principles:
- Bodies are immutable after build and safe to share across chains
- All oracle operations are pure functions of their arguments
- Public queries check the interior precondition; the samplers use the
  unchecked `_exit` because a reflected trajectory restarts on the boundary
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from bwalk.core.exceptions import InvalidConfigError, InvalidDimensionError, PreconditionError
from bwalk.core.rng import RandomStream, unit_direction

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Ray:
    """Oracle query: origin point and unit direction"""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float)
        direction = np.asarray(self.direction, dtype=float)
        if origin.shape != direction.shape:
            raise InvalidDimensionError("ray origin and direction differ in dimension")
        if not np.all(np.isfinite(origin)):
            raise PreconditionError("ray origin has non-finite components")
        if abs(np.linalg.norm(direction) - 1.0) > UNIT_TOLERANCE:
            raise PreconditionError("ray direction must have unit norm")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction)


@dataclass(frozen=True)
class BoundaryHit:
    """First-exit result: distance, inward unit normal, smoothness"""

    t: float
    normal: np.ndarray
    smooth: bool = True
    face: int = -1


class _Escaped:
    """Oracle outcome for a ray that never meets the boundary again"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ESCAPED"

    def __bool__(self) -> bool:
        return False


ESCAPED = _Escaped()
Escaped = _Escaped
ExitResult = Union[BoundaryHit, _Escaped]


def reflect_direction(d: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Specular reflection d - 2 (d, s) s about the unit normal s"""
    d = np.asarray(d, dtype=float)
    s = np.asarray(s, dtype=float)
    return d - 2.0 * float(np.dot(d, s)) * s


def toroid_path_bound(r: float) -> int:
    """
    Number of linear pieces B that suffice to connect any two points of
    the toroid with tube radius r by a polygonal path inside it.
    """
    if not 0.0 < r < 1.0:
        raise InvalidConfigError(f"toroid radius must lie in (0, 1), got {r}")
    ratio = math.pi / (2.0 * math.acos((1.0 - r) / (1.0 + r)))
    # snap ratios within rounding of an integer (r -> 1 gives ratio -> 1)
    return int(math.ceil(ratio - 1e-9)) + 1


def march_and_bisect(
    inside: Callable[[np.ndarray], bool],
    origin: np.ndarray,
    direction: np.ndarray,
    step: float = 1e-3,
    t_max: float = 1e3,
    tol: float = 1e-12,
    t_min: float = 0.0,
) -> Optional[float]:
    """
    First t in (t_min, t_max] where the membership predicate turns false,
    bracketed by uniform marching and refined by bisection. None when the
    ray stays inside up to t_max.
    """
    lo = t_min
    hi = t_min + step
    while hi <= t_max:
        if not inside(origin + hi * direction):
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if inside(origin + mid * direction):
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
        lo = hi
        hi += step
    return None


class Body(ABC):
    """
    Abstract open region with a Boundary Oracle.

    Attributes
    ----------
    name : str
        Body type label (matches the descriptor type).
    dimension : int
        Ambient dimension of points.
    intrinsic_dimension : int
        Dimension of the region itself (differs for the simplex).
    bounded : bool
        False when trajectories may escape to infinity.
    diameter : float | None
        Diameter estimate, the default trajectory-length scale.
    vertex_tolerance : float
        Facet-to-facet distance below which a polytope hit is nonsmooth
        (eps_vertex scaled by the diameter).
    """

    name: str = "body"

    def __init__(
        self,
        dimension: int,
        bounded: bool,
        diameter: Optional[float],
        eps_fwd_rel: float = 1e-12,
        eps_vertex: float = 1e-9,
        intrinsic_dimension: Optional[int] = None,
    ):
        if dimension < 1:
            raise InvalidDimensionError(f"body dimension must be positive, got {dimension}")
        self.dimension = dimension
        self.intrinsic_dimension = intrinsic_dimension or dimension
        self.bounded = bounded
        self.diameter = diameter
        self.eps_fwd = eps_fwd_rel * (diameter if diameter else 1.0)
        self.eps_vertex = eps_vertex
        self.vertex_tolerance = eps_vertex * (diameter if diameter else 1.0)

    # -- membership -------------------------------------------------------

    @abstractmethod
    def contains(self, p: np.ndarray) -> bool:
        """True iff p lies strictly inside the region"""

    def _check_point(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dimension,):
            raise InvalidDimensionError(
                f"point of dimension {p.shape} does not match body dimension {self.dimension}")
        return p

    def _require_interior(self, p: np.ndarray) -> np.ndarray:
        p = self._check_point(p)
        if not self.contains(p):
            raise PreconditionError(f"point is not interior to the {self.name}")
        return p

    # -- oracle -----------------------------------------------------------

    @abstractmethod
    def _exit(self, x: np.ndarray, d: np.ndarray) -> ExitResult:
        """First exit from x along d without the interior check"""

    def first_exit(self, ray: Ray) -> ExitResult:
        """First boundary hit along the ray, or ESCAPED"""
        origin = self._require_interior(ray.origin)
        return self._exit(origin, ray.direction)

    def chord(self, p: np.ndarray, d: np.ndarray) -> Tuple[float, float]:
        """
        Two-sided line query (t_under <= 0 <= t_over). Each side is the
        first boundary intersection in that direction; an escaped side is
        reported as -inf / +inf.
        """
        p = self._require_interior(p)
        d = np.asarray(d, dtype=float)
        forward = self._exit(p, d)
        backward = self._exit(p, -d)
        t_over = forward.t if isinstance(forward, BoundaryHit) else math.inf
        t_under = -backward.t if isinstance(backward, BoundaryHit) else -math.inf
        return t_under, t_over

    # -- sampling helpers -------------------------------------------------

    def random_direction(self, stream: RandomStream) -> np.ndarray:
        """Direction uniformly distributed over the directions of the region"""
        if self.dimension == 1:
            return np.array([1.0 if stream.generator.random() < 0.5 else -1.0])
        return unit_direction(stream, self.dimension)

    @abstractmethod
    def interior_point(self) -> np.ndarray:
        """A canonical interior point (barycenter or Chebyshev center)"""

    def orient_inward(self, y: np.ndarray, normal: np.ndarray) -> np.ndarray:
        """Flip normal when the membership sign check says it points outward"""
        probe = max(self.eps_fwd, 1e-9 * (self.diameter or 1.0))
        if not self.contains(y + probe * normal) and self.contains(y - probe * normal):
            return -normal
        return normal

    def describe(self) -> dict:
        return {
            "type": self.name,
            "dimension": self.dimension,
            "intrinsic_dimension": self.intrinsic_dimension,
            "bounded": self.bounded,
            "diameter": self.diameter,
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dimension={self.dimension}, bounded={self.bounded})"


class PiecewiseBody(Body):
    """
    Region bounded by several analytic pieces meeting at corner points.

    Subclasses return, for a ray, the first time each piece's constraint is
    violated; the oracle takes the earliest one and flags the hit as
    nonsmooth when two pieces tie or the hit lies near a declared corner.
    """

    corners: Sequence[np.ndarray] = ()

    @abstractmethod
    def _violation_times(self, x: np.ndarray, d: np.ndarray) -> Iterable[Tuple[float, int]]:
        """Pairs (t, piece) for the first violation of each piece after eps_fwd"""

    @abstractmethod
    def _piece_normal(self, piece: int, y: np.ndarray) -> np.ndarray:
        """Inward unit normal of a piece at boundary point y"""

    def _exit(self, x: np.ndarray, d: np.ndarray) -> ExitResult:
        times: List[Tuple[float, int]] = sorted(
            (t, piece) for t, piece in self._violation_times(x, d)
            if math.isfinite(t) and t > self.eps_fwd
        )
        if not times:
            return ESCAPED
        t, piece = times[0]
        y = x + t * d
        smooth = True
        if len(times) > 1 and times[1][0] - t <= self.eps_vertex:
            smooth = False
        elif self._near_corner(y):
            smooth = False
        normal = self._piece_normal(piece, y)
        return BoundaryHit(t=t, normal=normal, smooth=smooth, face=piece)

    def _near_corner(self, y: np.ndarray) -> bool:
        return any(np.linalg.norm(y - c) <= self.eps_vertex for c in self.corners)


def normalized(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def first_exit(body: Body, ray: Ray) -> ExitResult:
    """Boundary Oracle: first hit of the ray with the boundary"""
    return body.first_exit(ray)


def chord(body: Body, p: np.ndarray, d: np.ndarray) -> Tuple[float, float]:
    """Boundary Oracle: both ends of the segment of the line inside the body"""
    return body.chord(p, d)


def contains(body: Body, p: np.ndarray) -> bool:
    """Strict membership test"""
    return body.contains(body._check_point(p))
