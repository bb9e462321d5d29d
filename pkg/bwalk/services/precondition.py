"""
Dikin-ellipsoid preconditioning for polytopes.

The logarithmic barrier F(x) = -sum log(b_i - (a_i, x)) is minimized by
damped Newton from the Chebyshev center. Its Hessian H at the minimum x*
defines the Dikin ellipsoid {x : (H(x - x*), x - x*) <= 1}, which lies in
the polytope, and the map T = H^(-1/2) rounds the body: sampling runs in
y-coordinates, y = T^(-1)(x - x*), and samples map back by x = x* + T y.

Design Principles:
- Pure functions; DikinMap is immutable and shareable
- Convergence and rank problems surface as typed errors with residuals
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from bwalk.core.config import Settings, get_settings
from bwalk.core.exceptions import ConvergenceError, RankDeficiencyError, UnsupportedBodyError
from bwalk.core.rng import RandomStream, unit_direction
from bwalk.geometry.polytope import Polytope

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CenteringResult:
    """Damped Newton run on the log barrier"""

    center: np.ndarray
    iterations: int
    decrement: float
    barrier_values: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class DikinMap:
    """Center x*, barrier Hessian H and rounding map T = H^(-1/2)"""

    center: np.ndarray
    hessian: np.ndarray
    transform: np.ndarray
    inverse_transform: np.ndarray

    @property
    def condition_number(self) -> float:
        eigenvalues = np.linalg.eigvalsh(self.hessian)
        return float(eigenvalues[-1] / eigenvalues[0])

    @property
    def det_transform(self) -> float:
        return float(np.linalg.det(self.transform))

    def to_original(self, y: np.ndarray) -> np.ndarray:
        """x = x* + T y (row-wise for a sample matrix)"""
        y = np.asarray(y, dtype=float)
        return self.center + y @ self.transform.T

    def to_rounded(self, x: np.ndarray) -> np.ndarray:
        """y = T^(-1) (x - x*)"""
        x = np.asarray(x, dtype=float)
        return (x - self.center) @ self.inverse_transform.T

    def describe(self) -> dict:
        return {
            "method": "dikin",
            "center": self.center.tolist(),
            "condition_number": self.condition_number,
            "det_transform": self.det_transform,
        }


def barrier_value(polytope: Polytope, x: np.ndarray) -> float:
    slack = polytope.slack(x)
    if np.any(slack <= 0.0):
        return math.inf
    return float(-np.sum(np.log(slack)))


def barrier_hessian(polytope: Polytope, x: np.ndarray) -> np.ndarray:
    """H = sum a_i a_i^T / (b_i - (a_i, x))^2"""
    inv_slack = 1.0 / polytope.slack(x)
    scaled = polytope.A * inv_slack[:, None]
    return scaled.T @ scaled


def newton_centering(
    polytope: Polytope,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    start: Optional[np.ndarray] = None,
    settings: Optional[Settings] = None,
) -> CenteringResult:
    """
    Damped Newton on the log barrier with step 1 / (1 + lambda), lambda the
    Newton decrement; stops when lambda <= tol.
    """
    settings = settings or get_settings()
    tol = settings.precondition.NEWTON_TOL if tol is None else tol
    max_iter = settings.precondition.NEWTON_MAX_ITER if max_iter is None else max_iter
    if not polytope.bounded:
        raise UnsupportedBodyError("log barrier of an unbounded polytope has no minimum")

    x = polytope.interior_point() if start is None else np.asarray(start, dtype=float).copy()
    values = [barrier_value(polytope, x)]
    decrement = math.inf
    for iteration in range(max_iter + 1):
        inv_slack = 1.0 / polytope.slack(x)
        gradient = polytope.A.T @ inv_slack
        hessian = barrier_hessian(polytope, x)
        try:
            step = -np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError as e:
            raise RankDeficiencyError("barrier Hessian is singular during centering") from e
        decrement = math.sqrt(max(0.0, float(-gradient @ step)))
        if decrement <= tol:
            logger.debug(f"Newton centering converged in {iteration} iterations")
            return CenteringResult(x, iteration, decrement, values)
        if iteration == max_iter:
            break
        x = x + step / (1.0 + decrement)
        values.append(barrier_value(polytope, x))

    logger.error(f"Newton centering stopped at decrement {decrement:.3e}")
    raise ConvergenceError(
        f"Newton centering did not converge in {max_iter} iterations", residual=decrement)


def analytic_center(
    polytope: Polytope,
    tol: Optional[float] = None,
    start: Optional[np.ndarray] = None,
    settings: Optional[Settings] = None,
) -> np.ndarray:
    """Approximate minimizer x* of the log barrier"""
    return newton_centering(polytope, tol=tol, start=start, settings=settings).center


def dikin_map(
    polytope: Polytope,
    center: Optional[np.ndarray] = None,
    settings: Optional[Settings] = None,
) -> DikinMap:
    """
    Barrier Hessian at the analytic center and T = H^(-1/2) by symmetric
    eigendecomposition.

    Raises
    ------
    RankDeficiencyError
        Smallest eigenvalue below EIGEN_FLOOR_REL times the largest.
    """
    settings = settings or get_settings()
    x_star = analytic_center(polytope, settings=settings) if center is None else center
    hessian = barrier_hessian(polytope, x_star)
    hessian = 0.5 * (hessian + hessian.T)
    eigenvalues, vectors = np.linalg.eigh(hessian)
    floor = settings.precondition.EIGEN_FLOOR_REL * eigenvalues[-1]
    if eigenvalues[0] <= floor:
        raise RankDeficiencyError(
            f"barrier Hessian is numerically singular (min eigenvalue {eigenvalues[0]:.3e})")
    transform = (vectors / np.sqrt(eigenvalues)) @ vectors.T
    inverse = (vectors * np.sqrt(eigenvalues)) @ vectors.T
    logger.info(f"Dikin map: condition number {eigenvalues[-1] / eigenvalues[0]:.3e}")
    return DikinMap(center=x_star, hessian=hessian, transform=transform,
                    inverse_transform=inverse)


def transform_polytope(polytope: Polytope, dmap: DikinMap) -> Polytope:
    """Polytope in y-coordinates: rows A T, right-hand side b - A x*"""
    A = polytope.A @ dmap.transform
    b = polytope.b - polytope.A @ dmap.center
    return Polytope(A, b, interior=np.zeros(polytope.dimension), name=f"{polytope.name}_rounded",
                    eps_fwd_rel=polytope.eps_fwd / (polytope.diameter or 1.0),
                    eps_vertex=polytope.eps_vertex)


def dikin_ellipsoid_points(dmap: DikinMap, count: int, stream: RandomStream) -> np.ndarray:
    """Points on the Dikin ellipsoid boundary: x* + T u for unit u"""
    n = dmap.center.shape[0]
    if n == 1:
        units = np.where(stream.generator.random(count) < 0.5, -1.0, 1.0)[:, None]
    else:
        units = np.array([unit_direction(stream, n) for _ in range(count)])
    return dmap.to_original(units)
