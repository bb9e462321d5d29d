"""
Quadric bodies: Euclidean ball and centered ellipsoid.

Both oracles are closed-form: the ray meets the boundary at the roots of a
quadratic in t and, the origin being inside, the exit is the larger root.
"""

import logging
import math

import numpy as np

from bwalk.core.exceptions import InvalidDimensionError, NotPositiveDefiniteError
from bwalk.geometry.base import Body, BoundaryHit, ExitResult, ESCAPED

logger = logging.getLogger(__name__)


def _larger_root(a: float, half_b: float, c: float) -> float:
    """Larger root of a t^2 + 2 half_b t + c = 0, cancellation-free"""
    disc = half_b * half_b - a * c
    if disc < 0.0:
        return math.nan
    sq = math.sqrt(disc)
    if half_b <= 0.0:
        return (-half_b + sq) / a
    # -half_b - sq is the smaller root's numerator; use Vieta for the larger one
    return c / (-half_b - sq) if (-half_b - sq) != 0.0 else 0.0


class Ball(Body):
    """Open ball |x - center| < radius"""

    name = "ball"

    def __init__(self, center, radius: float, **kwargs):
        self.center = np.asarray(center, dtype=float).ravel()
        if radius <= 0.0:
            raise InvalidDimensionError("ball radius must be positive")
        self.radius = float(radius)
        super().__init__(self.center.shape[0], True, 2.0 * self.radius, **kwargs)

    def contains(self, p: np.ndarray) -> bool:
        return bool(np.sum((p - self.center) ** 2) < self.radius ** 2)

    def interior_point(self) -> np.ndarray:
        return self.center.copy()

    def _exit(self, x: np.ndarray, d: np.ndarray) -> ExitResult:
        rel = x - self.center
        t = _larger_root(float(d @ d), float(rel @ d), float(rel @ rel) - self.radius ** 2)
        if not t > self.eps_fwd:
            return ESCAPED
        y = x + t * d
        normal = -(y - self.center)
        return BoundaryHit(t=t, normal=normal / np.linalg.norm(normal), smooth=True, face=0)


class Ellipsoid(Body):
    """Open ellipsoid x^T A x < 1"""

    name = "ellipsoid"

    def __init__(self, A, **kwargs):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise InvalidDimensionError("ellipsoid matrix must be square")
        if not np.allclose(A, A.T, rtol=1e-12, atol=1e-12):
            raise NotPositiveDefiniteError("ellipsoid matrix is not symmetric")
        try:
            np.linalg.cholesky(A)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("ellipsoid matrix is not positive-definite") from exc
        self.matrix = 0.5 * (A + A.T)
        eigenvalues = np.linalg.eigvalsh(self.matrix)
        super().__init__(A.shape[0], True, 2.0 / math.sqrt(eigenvalues[0]), **kwargs)

    def contains(self, p: np.ndarray) -> bool:
        return bool(p @ self.matrix @ p < 1.0)

    def interior_point(self) -> np.ndarray:
        return np.zeros(self.dimension)

    def _exit(self, x: np.ndarray, d: np.ndarray) -> ExitResult:
        Ad = self.matrix @ d
        t = _larger_root(float(d @ Ad), float(x @ Ad), float(x @ self.matrix @ x) - 1.0)
        if not t > self.eps_fwd:
            return ESCAPED
        y = x + t * d
        normal = -(self.matrix @ y)
        return BoundaryHit(t=t, normal=normal / np.linalg.norm(normal), smooth=True, face=0)
