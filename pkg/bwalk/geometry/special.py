"""
Special test bodies: standard simplex, toroid, concave cusp and the two
truncated ellipses.

Design Principles:
- Each curved boundary piece is solved in closed form or by a bracketed
  root finder on the unexpanded constraint, never by expanding and
  trusting polynomial coefficients alone
- Nonsmooth parts of the boundary are declared as corner points so the
  samplers can restart trajectories that meet them
"""

import logging
import math
from typing import Iterable, List, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from bwalk.core.exceptions import InvalidConfigError, InvalidDimensionError
from bwalk.core.rng import RandomStream, gaussian_vector
from bwalk.geometry.base import (
    ESCAPED,
    Body,
    BoundaryHit,
    ExitResult,
    PiecewiseBody,
    normalized,
)

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
_BRENT_XTOL = 1e-30
_BRENT_RTOL = 8.9e-16


class StandardSimplex(Body):
    """
    Standard simplex {x in R^(n+1) : x_i > 0, sum x_i = 1}.

    Points live in the ambient space; directions are kept in the hyperplane
    sum d_i = 0, and facet k (x_k = 0) has the unit inward normal
    sqrt(1 / (n (n + 1))) * [-1, ..., n (at k), ..., -1].
    """

    name = "standard_simplex"
    PLANE_TOLERANCE = 1e-9

    def __init__(self, n: int, **kwargs):
        if n < 1:
            raise InvalidDimensionError(f"simplex dimension must be positive, got {n}")
        self.n = n
        self._normal_scale = math.sqrt(1.0 / (n * (n + 1)))
        super().__init__(n + 1, True, math.sqrt(2.0), intrinsic_dimension=n, **kwargs)

    def contains(self, p: np.ndarray) -> bool:
        return bool(np.all(p > 0.0) and abs(float(np.sum(p)) - 1.0) <= self.PLANE_TOLERANCE)

    def interior_point(self) -> np.ndarray:
        return np.full(self.n + 1, 1.0 / (self.n + 1))

    def facet_normal(self, k: int) -> np.ndarray:
        s = np.full(self.n + 1, -self._normal_scale)
        s[k] = self.n * self._normal_scale
        return s

    def random_direction(self, stream: RandomStream) -> np.ndarray:
        while True:
            g = gaussian_vector(stream, self.n + 1)
            g -= g.mean()
            norm = np.linalg.norm(g)
            if norm > 0.0:
                return g / norm

    def _exit(self, x: np.ndarray, d: np.ndarray) -> ExitResult:
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(d < 0.0, x / -d, math.inf)
        t = np.where(t > self.eps_fwd, t, math.inf)
        k = int(np.argmin(t))
        t_hit = float(t[k])
        if not math.isfinite(t_hit):
            return ESCAPED
        y = x + t_hit * d
        others = np.where(d < 0.0, y, math.inf)
        others[k] = math.inf
        smooth = bool(np.min(others) > self.vertex_tolerance)
        return BoundaryHit(t=t_hit, normal=self.facet_normal(k), smooth=smooth, face=k)

    def chord(self, p: np.ndarray, d: np.ndarray) -> Tuple[float, float]:
        p = self._require_interior(p)
        d = np.asarray(d, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -p / d
        t_over = float(np.min(np.where(d < 0.0, t, math.inf)))
        t_under = float(np.max(np.where(d > 0.0, t, -math.inf)))
        return t_under, t_over


class Toroid(Body):
    """
    Toroid {x : |x - c_x| < r}, c_x the projection of x onto the unit
    circle of the (x1, x2)-plane. Equivalently (rho - 1)^2 + |z|^2 < r^2 with
    rho = |(x1, x2)| and z = (x3, ..., xn).
    """

    name = "toroid"
    IMAG_TOLERANCE = 1e-6

    def __init__(self, n: int, r: float, **kwargs):
        if n < 2:
            raise InvalidDimensionError(f"toroid needs n >= 2, got {n}")
        if not 0.0 < r < 1.0:
            raise InvalidConfigError(f"toroid radius must lie in (0, 1), got {r}")
        self.r = float(r)
        super().__init__(n, True, 2.0 * (1.0 + r), **kwargs)

    def _g(self, p: np.ndarray) -> float:
        rho = math.hypot(p[0], p[1])
        return (rho - 1.0) ** 2 + float(p[2:] @ p[2:]) - self.r ** 2

    def contains(self, p: np.ndarray) -> bool:
        return bool(math.hypot(p[0], p[1]) > 0.0 and self._g(p) < 0.0)

    def interior_point(self) -> np.ndarray:
        x = np.zeros(self.dimension)
        x[0] = 1.0
        return x

    def center_of(self, p: np.ndarray) -> np.ndarray:
        """c_x: nearest point of the core circle"""
        c = np.zeros(self.dimension)
        rho = math.hypot(p[0], p[1])
        c[0], c[1] = p[0] / rho, p[1] / rho
        return c

    def _polish(self, x: np.ndarray, d: np.ndarray, t: float) -> float:
        """Newton steps on the unexpanded constraint along the ray"""
        for _ in range(3):
            y = x + t * d
            rho = math.hypot(y[0], y[1])
            if rho == 0.0:
                break
            drho = (y[0] * d[0] + y[1] * d[1]) / rho
            g = (rho - 1.0) ** 2 + float(y[2:] @ y[2:]) - self.r ** 2
            dg = 2.0 * (rho - 1.0) * drho + 2.0 * float(y[2:] @ d[2:])
            if dg == 0.0:
                break
            t -= g / dg
        return t

    def _crossings(self, x: np.ndarray, d: np.ndarray) -> List[float]:
        # (|y|^2 + 1 - r^2)^2 = 4 (y1^2 + y2^2) along y = x + t d
        full = Polynomial([float(x @ x), 2.0 * float(x @ d), float(d @ d)])
        planar = Polynomial([x[0] ** 2 + x[1] ** 2, 2.0 * (x[0] * d[0] + x[1] * d[1]),
                             d[0] ** 2 + d[1] ** 2])
        quartic = (full + (1.0 - self.r ** 2)) ** 2 - 4.0 * planar
        roots = quartic.roots()
        real = [float(z.real) for z in roots if abs(z.imag) <= self.IMAG_TOLERANCE]
        return sorted(self._polish(x, d, t) for t in real)

    def _exit(self, x: np.ndarray, d: np.ndarray) -> ExitResult:
        candidates = [t for t in self._crossings(x, d) if t > self.eps_fwd]
        for i, t in enumerate(candidates):
            after = candidates[i + 1] if i + 1 < len(candidates) else t + 1.0
            if not self.contains(x + 0.5 * (t + after) * d):
                y = x + t * d
                return BoundaryHit(t=t, normal=self._normal(y), smooth=True, face=0)
        return ESCAPED

    def _normal(self, y: np.ndarray) -> np.ndarray:
        rho = math.hypot(y[0], y[1])
        grad = 2.0 * y.copy()
        grad[0] = 2.0 * (rho - 1.0) * y[0] / rho
        grad[1] = 2.0 * (rho - 1.0) * y[1] / rho
        return self.orient_inward(y, -normalized(grad))

    def angle(self, p: np.ndarray) -> float:
        return math.atan2(p[1], p[0])


class ConcaveCusp(PiecewiseBody):
    """
    Cusp {-x1^4 < x2 < x1^4, 0 < x1 < 1} with its apex at the origin.

    Along a ray both curve constraints x1^4 - x2 > 0 and x1^4 + x2 > 0 are
    convex functions of t, so each is violated on at most one interval whose
    left end is found by Brent's method between t = 0 and the minimizer.
    """

    name = "concave_cusp"
    UPPER, LOWER, RIGHT, LEFT = 0, 1, 2, 3

    def __init__(self, **kwargs):
        self.corners = (np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([1.0, -1.0]))
        super().__init__(2, True, 2.0, **kwargs)

    def contains(self, p: np.ndarray) -> bool:
        x1, x2 = float(p[0]), float(p[1])
        return 0.0 < x1 < 1.0 and -x1 ** 4 < x2 < x1 ** 4

    def interior_point(self) -> np.ndarray:
        return np.array([0.9, 0.0])

    @staticmethod
    def _curve_violation(p1: float, p2: float, d1: float, d2: float, sign: float) -> float:
        """First t > 0 where x1(t)^4 - sign * x2(t) turns negative"""
        def f(t: float) -> float:
            return (p1 + t * d1) ** 4 - sign * (p2 + t * d2)

        if d1 == 0.0:
            rate = sign * d2
            return (p1 ** 4 - sign * p2) / rate if rate > 0.0 else math.inf
        # f'(t) = 4 d1 x1^3 - sign d2 vanishes at x1 = cbrt(sign d2 / (4 d1))
        x_star = np.cbrt(sign * d2 / (4.0 * d1))
        t_min = (x_star - p1) / d1
        if t_min <= 0.0 or f(t_min) >= 0.0:
            return math.inf
        if f(0.0) <= 0.0:
            return 0.0
        return brentq(f, 0.0, t_min, xtol=_BRENT_XTOL, rtol=_BRENT_RTOL)

    def _violation_times(self, x: np.ndarray, d: np.ndarray) -> Iterable[Tuple[float, int]]:
        p1, p2 = float(x[0]), float(x[1])
        d1, d2 = float(d[0]), float(d[1])
        yield self._curve_violation(p1, p2, d1, d2, 1.0), self.UPPER
        yield self._curve_violation(p1, p2, d1, d2, -1.0), self.LOWER
        if d1 > 0.0:
            yield (1.0 - p1) / d1, self.RIGHT
        elif d1 < 0.0:
            yield -p1 / d1, self.LEFT

    def _piece_normal(self, piece: int, y: np.ndarray) -> np.ndarray:
        slope = 4.0 * float(y[0]) ** 3
        if piece == self.UPPER:
            return normalized(np.array([slope, -1.0]))
        if piece == self.LOWER:
            return normalized(np.array([slope, 1.0]))
        if piece == self.RIGHT:
            return np.array([-1.0, 0.0])
        return np.array([1.0, 0.0])


class TruncatedEllipse(PiecewiseBody):
    """
    Ellipse x1^2/4 + x2^2 < 1 (foci at (+-sqrt(3), 0)) truncated by
    x1 < sqrt(3) - |x2| (convex variant) or x1 < sqrt(3) + |x2| (nonconvex
    variant). Both have a corner at the right focus, so billiard trajectories
    launched from the left focus reach it after one reflection.
    """

    name = "truncated_ellipse"
    ELLIPSE, PLUS, MINUS = 0, 1, 2

    def __init__(self, variant: str = "convex", **kwargs):
        if variant not in ("convex", "nonconvex"):
            raise InvalidConfigError(f"unknown truncated ellipse variant {variant!r}")
        self.variant = variant
        self.matrix = np.diag([0.25, 1.0])
        if variant == "convex":
            s = (SQRT3 + 2.0 * math.sqrt(2.0)) / 5.0
            x_side = SQRT3 - s
        else:
            s = (2.0 * math.sqrt(2.0) - SQRT3) / 5.0
            x_side = SQRT3 + s
        self.corners = (
            np.array([SQRT3, 0.0]), np.array([x_side, s]), np.array([x_side, -s]),
        )
        # rows of the two half-planes x1 + x2 < sqrt3 and x1 - x2 < sqrt3
        self._lines = {self.PLUS: np.array([1.0, 1.0]), self.MINUS: np.array([1.0, -1.0])}
        super().__init__(2, True, 4.0, **kwargs)

    @property
    def focus(self) -> np.ndarray:
        return np.array([-SQRT3, 0.0])

    def contains(self, p: np.ndarray) -> bool:
        if not float(p @ self.matrix @ p) < 1.0:
            return False
        if self.variant == "convex":
            return float(p[0]) + abs(float(p[1])) < SQRT3
        return float(p[0]) - abs(float(p[1])) < SQRT3

    def interior_point(self) -> np.ndarray:
        return np.zeros(2)

    def _ellipse_exit(self, x: np.ndarray, d: np.ndarray) -> float:
        a = float(d @ self.matrix @ d)
        half_b = float(x @ self.matrix @ d)
        c = float(x @ self.matrix @ x) - 1.0
        disc = half_b * half_b - a * c
        if disc < 0.0:
            return math.inf
        return (-half_b + math.sqrt(disc)) / a

    def _violation_times(self, x: np.ndarray, d: np.ndarray) -> Iterable[Tuple[float, int]]:
        yield self._ellipse_exit(x, d), self.ELLIPSE
        if self.variant == "convex":
            for piece, row in self._lines.items():
                rate = float(row @ d)
                if rate > 0.0:
                    yield (SQRT3 - float(row @ x)) / rate, piece
            return

        # nonconvex: leave the union of the two half-planes
        inside_until = {}
        entering_at = []
        for piece, row in self._lines.items():
            slack = SQRT3 - float(row @ x)
            rate = float(row @ d)
            if rate > 0.0:
                if slack > -self.eps_fwd:
                    inside_until[piece] = slack / rate
            elif rate < 0.0:
                enter = slack / rate
                if enter <= self.eps_fwd:
                    inside_until[piece] = math.inf
                else:
                    entering_at.append(enter)
            elif slack > 0.0:
                inside_until[piece] = math.inf
        if not inside_until:
            logger.debug("Ray origin outside both truncation half-planes")
            return
        piece = max(inside_until, key=inside_until.get)
        end = inside_until[piece]
        if math.isfinite(end) and not any(enter < end for enter in entering_at):
            yield end, piece

    def _piece_normal(self, piece: int, y: np.ndarray) -> np.ndarray:
        if piece == self.ELLIPSE:
            return self.orient_inward(y, -normalized(self.matrix @ y))
        return -normalized(self._lines[piece])
