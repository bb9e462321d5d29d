"""
Polytope bodies {x : (a_i, x) < b_i}.

The Boundary Oracle is explicit: with slack_i = b_i - (a_i, x) and
t_i = slack_i / (a_i, d), the forward exit is the smallest positive t_i,
the backward exit the largest negative one, and the inward normal is
-a_i / |a_i| for the row attaining it.

Unit cube, axis box, strip, orthant and the plane-angle triangle are all
polytopes with known bounds, so their builders skip the LP checks.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from bwalk.core.exceptions import EmptyInteriorError, InvalidDimensionError
from bwalk.geometry.base import ESCAPED, Body, BoundaryHit, ExitResult

logger = logging.getLogger(__name__)

_CHEBYSHEV_RADIUS_CAP = 1e6


class Polytope(Body):
    """
    Open polytope in half-space representation.

    Parameters
    ----------
    A, b : array-like
        Constraint rows and right-hand side.
    escape_rows : sequence of int
        Rows that act as escape lines: reaching them ends the trajectory
        with ESCAPED instead of a reflection.
    bounds : (lower, upper) | None
        Known bounding box; skips the LP boundedness check.
    bounded : bool | None
        Known boundedness; skips the LP check.
    interior : array-like | None
        Known interior point; skips the Chebyshev LP.
    """

    name = "polytope"

    def __init__(
        self,
        A,
        b,
        escape_rows: Sequence[int] = (),
        bounds: Optional[Tuple[np.ndarray, np.ndarray]] = None,
        bounded: Optional[bool] = None,
        interior=None,
        name: Optional[str] = None,
        eps_fwd_rel: float = 1e-12,
        eps_vertex: float = 1e-9,
    ):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if A.shape[0] != b.shape[0]:
            raise InvalidDimensionError(
                f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        norms = np.linalg.norm(A, axis=1)
        zero = norms == 0.0
        if np.any(zero & (b <= 0.0)):
            raise EmptyInteriorError("zero constraint row with non-positive right-hand side")
        keep = ~zero
        index_map = np.cumsum(keep) - 1
        self.A = A[keep] / norms[keep, None]
        self.b = b[keep] / norms[keep]
        self.escape_rows = frozenset(int(index_map[i]) for i in escape_rows if keep[i])
        if name:
            self.name = name

        n = self.A.shape[1]
        self._interior = (np.asarray(interior, dtype=float) if interior is not None
                          else self._chebyshev_center())

        if bounds is None and bounded is None:
            bounds = self._bounding_box()
            bounded = bounds is not None
        elif bounded is None:
            bounded = True
        self.bounds = bounds
        diameter = float(np.linalg.norm(bounds[1] - bounds[0])) if bounds is not None else None

        super().__init__(n, bounded, diameter, eps_fwd_rel=eps_fwd_rel, eps_vertex=eps_vertex)

    # -- build-time checks ------------------------------------------------

    def _chebyshev_center(self) -> np.ndarray:
        """Center of the largest inscribed ball (radius capped for unbounded sets)"""
        m, n = self.A.shape
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([self.A, np.ones((m, 1))])
        bounds = [(None, None)] * n + [(0.0, _CHEBYSHEV_RADIUS_CAP)]
        res = linprog(c, A_ub=A_ub, b_ub=self.b, bounds=bounds, method="highs")
        if res.status == 2:
            raise EmptyInteriorError("polytope constraints are infeasible")
        if res.status != 0:
            raise EmptyInteriorError(f"Chebyshev center LP failed: {res.message}")
        radius = res.x[-1]
        if radius <= 1e-12 * max(1.0, float(np.max(np.abs(self.b)))):
            raise EmptyInteriorError("polytope has an empty interior")
        logger.debug(f"Chebyshev center radius {radius:.3e}")
        return res.x[:-1]

    def _bounding_box(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Coordinate extents by 2n LPs; None when some direction is unbounded"""
        n = self.A.shape[1]
        lower = np.empty(n)
        upper = np.empty(n)
        free = [(None, None)] * n
        for j in range(n):
            for sign in (1.0, -1.0):
                c = np.zeros(n)
                c[j] = sign
                res = linprog(c, A_ub=self.A, b_ub=self.b, bounds=free, method="highs")
                if res.status == 3:
                    return None
                if res.status != 0:
                    raise EmptyInteriorError(f"bounding LP failed: {res.message}")
                if sign > 0:
                    lower[j] = res.fun
                else:
                    upper[j] = -res.fun
        return lower, upper

    # -- membership and oracle --------------------------------------------

    def slack(self, x: np.ndarray) -> np.ndarray:
        return self.b - self.A @ x

    def contains(self, p: np.ndarray) -> bool:
        return bool(np.all(self.slack(p) > 0.0))

    def interior_point(self) -> np.ndarray:
        return self._interior.copy()

    def _exit(self, x: np.ndarray, d: np.ndarray) -> ExitResult:
        slack = self.slack(x)
        ad = self.A @ d
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(ad > 0.0, slack / ad, math.inf)
        t = np.where(t > self.eps_fwd, t, math.inf)
        k = int(np.argmin(t))
        t_hit = float(t[k])
        if not math.isfinite(t_hit):
            return ESCAPED
        if k in self.escape_rows:
            return ESCAPED

        # another facet within eps_vertex * diameter of the hit point means an edge or vertex
        others = slack - t_hit * ad
        others[k] = math.inf
        others = np.where(ad > 0.0, others, math.inf)
        smooth = bool(np.min(others) > self.vertex_tolerance)
        return BoundaryHit(t=t_hit, normal=-self.A[k], smooth=smooth, face=k)

    def chord_faces(
        self, p: np.ndarray, d: np.ndarray, skip_escape_rows: bool = False
    ) -> Tuple[float, int, float, int]:
        """Chord ends with the rows attaining them (-1 for an infinite end)"""
        slack = self.slack(p)
        ad = self.A @ d
        active = ad != 0.0
        if skip_escape_rows and self.escape_rows:
            active[list(self.escape_rows)] = False
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(active, slack / np.where(active, ad, 1.0), math.nan)
        over = np.where(active & (ad > 0.0), t, math.inf)
        under = np.where(active & (ad < 0.0), t, -math.inf)
        k_over = int(np.argmin(over))
        k_under = int(np.argmax(under))
        t_over = float(over[k_over])
        t_under = float(under[k_under])
        return (
            t_under, k_under if math.isfinite(t_under) else -1,
            t_over, k_over if math.isfinite(t_over) else -1,
        )

    def chord(self, p: np.ndarray, d: np.ndarray) -> Tuple[float, float]:
        p = self._require_interior(p)
        t_under, k_under, t_over, k_over = self.chord_faces(p, np.asarray(d, dtype=float))
        if k_over in self.escape_rows:
            t_over = math.inf
        if k_under in self.escape_rows:
            t_under = -math.inf
        return t_under, t_over

    def describe(self) -> dict:
        info = super().describe()
        info["rows"] = int(self.A.shape[0])
        return info


def unit_cube(n: int) -> Polytope:
    """0 < x < 1"""
    eye = np.eye(n)
    return Polytope(
        np.vstack([eye, -eye]), np.concatenate([np.ones(n), np.zeros(n)]),
        bounds=(np.zeros(n), np.ones(n)), interior=np.full(n, 0.5), name="unit_cube",
    )


def axis_box(lower, upper) -> Polytope:
    """lower < x < upper"""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape:
        raise InvalidDimensionError("box bounds differ in dimension")
    if np.any(upper <= lower):
        raise EmptyInteriorError("box has an empty interior")
    n = lower.shape[0]
    eye = np.eye(n)
    return Polytope(
        np.vstack([eye, -eye]), np.concatenate([upper, -lower]),
        bounds=(lower, upper), interior=0.5 * (lower + upper), name="axis_box",
    )


def strip(M: float) -> Polytope:
    """0 < x2 < 1, |x1| < M"""
    A = np.array([[0.0, 1.0], [0.0, -1.0], [1.0, 0.0], [-1.0, 0.0]])
    b = np.array([1.0, 0.0, M, M])
    return Polytope(
        A, b, bounds=(np.array([-M, 0.0]), np.array([M, 1.0])),
        interior=np.array([0.0, 0.5]), name="strip",
    )


def orthant(n: int) -> Polytope:
    """x > 0, unbounded"""
    return Polytope(-np.eye(n), np.zeros(n), bounded=False, bounds=None,
                    interior=np.ones(n), name="orthant")


def angle_triangle(alpha: float) -> Polytope:
    """
    Plane angle of opening alpha with its apex at the origin and bisector
    along x2, cut by the escape line x2 = 1.
    """
    k = math.tan(alpha / 2.0)
    A = np.array([[1.0, -k], [-1.0, -k], [0.0, 1.0]])
    b = np.array([0.0, 0.0, 1.0])
    return Polytope(A, b, escape_rows=(2,), bounded=False, bounds=None,
                    interior=np.array([0.0, 0.5]), name="angle_triangle")
