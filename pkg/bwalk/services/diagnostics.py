"""
Uniformity and escape diagnostics.

This module implements the statistics used to judge the samplers:
- Pearson chi-square statistics and two-tailed acceptance bands
- Histograms over axis slabs, cube halvings, nested simplices, vertex cells
  and toroid angles
- Cell-transition (serial correlation) probabilities with independent
  uniform references
- Escape statistics from unbounded corners for BW and HR, with the HR
  analytic escape laws
- Exact-uniform reference samples for cube, simplex and ball
- Horizontal displacement per BO call in the strip

Design Principles:
- Pure aggregation over immutable sample matrices
- Partition errors surface as InvalidPartitionError / OutOfBodyError
- Censored escape trials are reported separately and excluded from means
"""

import logging
import math
from typing import Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from bwalk.core.config import Settings, get_settings
from bwalk.core.exceptions import InvalidConfigError, InvalidPartitionError, OutOfBodyError
from bwalk.core.rng import RandomStream, gaussian_vector, uniform_interval
from bwalk.geometry.base import Body
from bwalk.geometry.polytope import Polytope
from bwalk.schemas.diagnostics import (
    AxisSlabs,
    CellTransitionResult,
    ChiSquareResult,
    CubeHalving,
    EscapeStatistics,
    NestedSimplex,
    PartitionSpec,
    SimplexVertexCells,
)
from bwalk.schemas.sampling import SamplerKind, TerminationReason
from bwalk.services.samplers import billiard_trajectory

logger = logging.getLogger(__name__)

HrReading = Literal["chord", "point"]


# ---------------------------------------------------------------------------
# chi-square
# ---------------------------------------------------------------------------

def chi_square_statistic(
    observed: Sequence[float], expected: Union[Sequence[float], float]
) -> ChiSquareResult:
    """Pearson statistic sum (o - e)^2 / e with dof = bins - 1"""
    observed_arr = np.asarray(observed, dtype=float)
    expected_arr = np.broadcast_to(np.asarray(expected, dtype=float), observed_arr.shape)
    if observed_arr.ndim != 1 or observed_arr.size < 1:
        raise InvalidPartitionError("observed counts must be a non-empty vector")
    if np.any(expected_arr <= 0.0):
        raise InvalidPartitionError("expected counts must be positive in every cell")
    statistic = float(np.sum((observed_arr - expected_arr) ** 2 / expected_arr))
    return ChiSquareResult(
        statistic=statistic,
        dof=observed_arr.size - 1,
        observed=observed_arr.tolist(),
        expected=expected_arr.tolist(),
    )


def chi_square_band(
    dof: int, level: Optional[float] = None, settings: Optional[Settings] = None
) -> Tuple[float, float]:
    """Two-tailed acceptance band; the tabulated [3.3, 16.9] at 9 dof and 10%"""
    diagnostics = (settings or get_settings()).diagnostics
    level = diagnostics.CHI2_TWO_TAILED_LEVEL if level is None else level
    if dof < 1:
        raise InvalidPartitionError(f"chi-square band needs dof >= 1, got {dof}")
    if not 0.0 < level < 1.0:
        raise InvalidConfigError(f"significance level must lie in (0, 1), got {level}")
    if dof == 9 and math.isclose(level, 0.10):
        return diagnostics.CHI2_LOWER_9DOF, diagnostics.CHI2_UPPER_9DOF
    return float(stats.chi2.ppf(level / 2.0, dof)), float(stats.chi2.ppf(1.0 - level / 2.0, dof))


def chi_square_test(
    observed: Sequence[float],
    expected: Union[Sequence[float], float, None] = None,
    level: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> ChiSquareResult:
    """Statistic plus pass/fail against the two-tailed band (equal cells by default)"""
    if expected is None:
        expected = float(np.sum(observed)) / len(observed)
    result = chi_square_statistic(observed, expected)
    band = chi_square_band(result.dof, level, settings=settings)
    return result.model_copy(update={
        "band": band,
        "passed": band[0] <= result.statistic <= band[1],
    })


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------

def _as_matrix(samples) -> np.ndarray:
    points = np.asarray(samples, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    return points


def slab_histogram(samples, spec: AxisSlabs) -> np.ndarray:
    """Counts per equal slab of [0, 1) along spec.axis"""
    points = _as_matrix(samples)
    if points.shape[0] == 0:
        return np.zeros(spec.bins, dtype=int)
    if spec.axis >= points.shape[1]:
        raise InvalidPartitionError(f"axis {spec.axis} outside dimension {points.shape[1]}")
    values = points[:, spec.axis]
    if np.any((values < 0.0) | (values >= 1.0)):
        raise OutOfBodyError(f"samples outside [0, 1) on axis {spec.axis}")
    cells = np.minimum((values * spec.bins).astype(int), spec.bins - 1)
    return np.bincount(cells, minlength=spec.bins)


def cube_cells(samples, spec: CubeHalving) -> np.ndarray:
    """Index of the halving subcube (bit i set when x_i >= 1/2)"""
    points = _as_matrix(samples)
    if points.shape[1] != spec.n:
        raise InvalidPartitionError(f"samples have dimension {points.shape[1]}, expected {spec.n}")
    weights = 1 << np.arange(spec.n, dtype=np.int64)
    return (points >= 0.5).astype(np.int64) @ weights


def cell_transition_probabilities(samples, spec: CubeHalving) -> CellTransitionResult:
    """Fractions of consecutive pairs that leave / stay in their subcube"""
    points = _as_matrix(samples)
    if points.shape[0] < 2:
        raise InvalidPartitionError("cell transitions need at least two samples")
    cells = cube_cells(points, spec)
    leave = float(np.mean(cells[1:] != cells[:-1]))
    reference_stay = 2.0 ** -spec.n
    return CellTransitionResult(
        leave=leave,
        stay=1.0 - leave,
        reference_leave=1.0 - reference_stay,
        reference_stay=reference_stay,
        pairs=points.shape[0] - 1,
    )


def serial_correlation(samples, spec: CubeHalving) -> float:
    """Empirical probability that consecutive samples change subcube"""
    return cell_transition_probabilities(samples, spec).leave


def nested_simplex_volume_fraction(n: int, alpha) -> np.ndarray:
    """f(alpha) = (1 - (n + 1) alpha)^n, the volume share of S_alpha"""
    alpha = np.asarray(alpha, dtype=float)
    return np.clip(1.0 - (n + 1) * alpha, 0.0, None) ** n


def nested_simplex_fraction(samples, alpha) -> Tuple[np.ndarray, np.ndarray]:
    """Empirical share of samples with min coordinate >= alpha, and f(alpha)"""
    points = _as_matrix(samples)
    n = points.shape[1] - 1
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if np.any((alpha < 0.0) | (alpha > 1.0 / (n + 1))):
        raise InvalidPartitionError(f"alpha must lie in [0, 1/{n + 1}]")
    minima = np.sort(points.min(axis=1))
    if minima.size == 0:
        empirical = np.full(alpha.shape, math.nan)
    else:
        empirical = 1.0 - np.searchsorted(minima, alpha, side="left") / minima.size
    return empirical, nested_simplex_volume_fraction(n, alpha)


def nested_simplex_partition(n: int, cells: int) -> np.ndarray:
    """alpha_0 = 0 < ... < alpha_k with f(alpha_i) = 1 - i / k"""
    if cells < 2:
        raise InvalidPartitionError("nested simplex partition needs at least two cells")
    if n < 1:
        raise InvalidPartitionError("simplex dimension must be positive")
    shares = 1.0 - np.arange(cells + 1) / cells
    return (1.0 - shares ** (1.0 / n)) / (n + 1)


def nested_simplex_counts(samples, spec: NestedSimplex) -> np.ndarray:
    """Counts per equal-volume shell S_alpha_i minus S_alpha_(i+1)"""
    points = _as_matrix(samples)
    if points.shape[1] != spec.n + 1:
        raise InvalidPartitionError(
            f"samples have dimension {points.shape[1]}, expected {spec.n + 1}")
    alphas = nested_simplex_partition(spec.n, spec.levels)
    shells = np.searchsorted(alphas, points.min(axis=1), side="right") - 1
    return np.bincount(np.clip(shells, 0, spec.levels - 1), minlength=spec.levels)


def simplex_vertex_cells(samples, n: int) -> np.ndarray:
    """Counts per nearest-vertex cell (argmax coordinate, lowest index on ties)"""
    points = _as_matrix(samples)
    if points.shape[1] != n + 1:
        raise InvalidPartitionError(f"samples have dimension {points.shape[1]}, expected {n + 1}")
    return np.bincount(np.argmax(points, axis=1), minlength=n + 1)


def partition_counts(samples, spec: PartitionSpec) -> np.ndarray:
    """Cell counts for any partition spec (every sample in exactly one cell)"""
    if isinstance(spec, AxisSlabs):
        return slab_histogram(samples, spec)
    if isinstance(spec, CubeHalving):
        return np.bincount(cube_cells(samples, spec), minlength=2 ** spec.n)
    if isinstance(spec, NestedSimplex):
        return nested_simplex_counts(samples, spec)
    if isinstance(spec, SimplexVertexCells):
        return simplex_vertex_cells(samples, spec.n)
    raise InvalidPartitionError(f"unknown partition {spec!r}")


def angular_histogram(samples, bins: int = 12) -> np.ndarray:
    """Counts of atan2(x2, x1) over equal angular bins of [-pi, pi)"""
    if bins < 1:
        raise InvalidPartitionError("angular histogram needs at least one bin")
    points = _as_matrix(samples)
    if points.shape[0] == 0:
        return np.zeros(bins, dtype=int)
    angles = np.arctan2(points[:, 1], points[:, 0])
    cells = np.floor((angles + math.pi) / (2.0 * math.pi) * bins).astype(int)
    return np.bincount(np.clip(cells, 0, bins - 1), minlength=bins)


# ---------------------------------------------------------------------------
# exact-uniform references
# ---------------------------------------------------------------------------

def uniform_reference_samples(
    kind: Literal["cube", "simplex", "ball"], n: int, count: int, stream: RandomStream
) -> np.ndarray:
    """
    Independent exact-uniform samples: per-coordinate uniforms on the unit
    cube, normalized exponential spacings on the standard simplex in R^(n+1),
    Gaussian direction times U^(1/n) radius in the unit ball.
    """
    if n < 1:
        raise InvalidConfigError(f"reference samples need n >= 1, got {n}")
    generator = stream.generator
    if kind == "cube":
        return generator.random((count, n))
    if kind == "simplex":
        spacings = generator.standard_exponential((count, n + 1))
        return spacings / spacings.sum(axis=1, keepdims=True)
    if kind == "ball":
        directions = np.array([gaussian_vector(stream, n) for _ in range(count)]).reshape(count, n)
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = generator.random(count) ** (1.0 / n)
        return directions * radii[:, None]
    raise InvalidConfigError(f"unknown reference kind {kind!r}")


# ---------------------------------------------------------------------------
# corner escape
# ---------------------------------------------------------------------------

def hr_angle_escape_law(alpha: float, iterations: int) -> float:
    """P(HR leaves the plane angle within N iterations) = 1 - (1 - alpha/pi)^N"""
    return 1.0 - (1.0 - alpha / math.pi) ** iterations


def hr_orthant_escape_law(n: int, iterations: int = 1) -> float:
    """P(HR chord in the n-orthant is unbounded within N iterations), p = 2^(1-n)"""
    p = 2.0 ** (1 - n)
    return 1.0 - (1.0 - p) ** iterations


def hr_orthant_two_step_law(n: int) -> float:
    """2^-(n-2) (1 - 2^-n): the orthant escape share after two HR iterations"""
    return 2.0 ** -(n - 2) * (1.0 - 2.0 ** -n)


def _unbounded_chord(body: Polytope, x: np.ndarray, d: np.ndarray) -> Tuple[bool, float, float]:
    t_under, _, t_over, _ = body.chord_faces(x, d, skip_escape_rows=True)
    return not (math.isfinite(t_under) and math.isfinite(t_over)), t_under, t_over


def _hr_escape_iterations(
    body: Polytope, start: np.ndarray, stream: RandomStream, reading: HrReading, cap: int
) -> Optional[int]:
    x = start.copy()
    escape_rows = list(body.escape_rows)
    for iteration in range(1, cap + 1):
        d = body.random_direction(stream)
        if reading == "chord":
            t_under, k_under, t_over, k_over = body.chord_faces(x, d)
            if k_under in body.escape_rows or k_over in body.escape_rows:
                return iteration
            if not (math.isfinite(t_under) and math.isfinite(t_over)):
                return iteration
        else:
            unbounded, t_under, t_over = _unbounded_chord(body, x, d)
            if unbounded:
                return iteration
        x = x + uniform_interval(stream, t_under, t_over) * d
        if reading == "point" and escape_rows:
            if np.any(body.A[escape_rows] @ x >= body.b[escape_rows]):
                return iteration
    return None


def escape_statistics(
    body: Polytope,
    sampler: Union[SamplerKind, str],
    trials: int,
    seed: int,
    start: Optional[np.ndarray] = None,
    hr_reading: HrReading = "chord",
    cap: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> EscapeStatistics:
    """
    Reflections (BW) or iterations (HR) needed to leave an unbounded corner.

    BW counts the reflections of one uncapped billiard trajectory per trial
    until the oracle reports an escape (reaching an escape row or no further
    intersection). HR counts iterations until the current chord reaches the
    escape line ("chord" reading) or until the sampled point lies beyond it
    ("point" reading); an unbounded chord always escapes. Trials exceeding
    the cap are censored.
    """
    settings = settings or get_settings()
    sampler = SamplerKind(sampler)
    cap = settings.diagnostics.ESCAPE_TRIAL_CAP if cap is None else cap
    if trials < 0:
        raise InvalidConfigError("trials must be non-negative")
    x0 = body.interior_point() if start is None else np.asarray(start, dtype=float)
    if not body.contains(x0):
        raise InvalidConfigError(f"escape start {x0.tolist()} is not interior")

    stream = RandomStream(seed)
    counts = []
    bo_counts = []
    censored = 0
    for _ in range(trials):
        if sampler == SamplerKind.BW:
            trajectory = billiard_trajectory(
                body, x0, body.random_direction(stream), max_bo=cap + 1,
                stop_on_nonsmooth=False, settings=settings)
            if trajectory.reason == TerminationReason.ESCAPED:
                counts.append(trajectory.reflections)
                bo_counts.append(trajectory.bo_calls)
            else:
                censored += 1
        else:
            iterations = _hr_escape_iterations(body, x0, stream, hr_reading, cap)
            if iterations is None:
                censored += 1
            else:
                counts.append(iterations)
                bo_counts.append(2 * iterations)

    if censored:
        logger.warning(f"{censored} of {trials} escape trials censored at cap {cap}")
    counts_arr = np.asarray(counts, dtype=float)
    return EscapeStatistics(
        sampler=sampler.value,
        trials=trials,
        mean=float(counts_arr.mean()) if counts else None,
        std=float(counts_arr.std(ddof=1)) if len(counts) > 1 else None,
        max=int(counts_arr.max()) if counts else None,
        bo_mean=float(np.mean(bo_counts)) if bo_counts else None,
        censored=censored,
        counts=[int(c) for c in counts],
    )


def hr_escape_iterations(
    body: Polytope,
    max_iterations: int,
    trials: int,
    seed: int,
    start: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Iteration (1-based) at which each HR run first draws an unbounded chord,
    ignoring escape rows; 0 when it stays bounded for max_iterations steps.
    """
    x0 = body.interior_point() if start is None else np.asarray(start, dtype=float)
    stream = RandomStream(seed)
    first = np.zeros(trials, dtype=int)
    for trial in range(trials):
        x = x0.copy()
        for iteration in range(1, max_iterations + 1):
            d = body.random_direction(stream)
            unbounded, t_under, t_over = _unbounded_chord(body, x, d)
            if unbounded:
                first[trial] = iteration
                break
            x = x + uniform_interval(stream, t_under, t_over) * d
    return first


def hr_escape_frequency(
    body: Polytope,
    iterations: int,
    trials: int,
    seed: int,
    start: Optional[np.ndarray] = None,
) -> float:
    """Share of HR runs whose chord becomes unbounded within `iterations` steps"""
    if trials < 1:
        raise InvalidConfigError("escape frequency needs at least one trial")
    first = hr_escape_iterations(body, iterations, trials, seed, start)
    return float(np.mean(first > 0))


# ---------------------------------------------------------------------------
# strip displacement
# ---------------------------------------------------------------------------

def strip_displacement(
    body: Body,
    sampler: Union[SamplerKind, str],
    bo_per_walker: int,
    walkers: int,
    seed: int,
    start: Optional[np.ndarray] = None,
    settings: Optional[Settings] = None,
) -> float:
    """
    Horizontal travel sum |dx1| per BO call, averaged over walkers.

    BW walkers follow one uncapped billiard trajectory that stops after
    exactly bo_per_walker oracle calls, summing |dx1| over its segments; HR
    walkers take bo_per_walker / 2 steps (two BO calls each), summing |dx1|
    over the steps. Without a start, walkers start at x1 = 0 with x2
    uniform on (0, 1).
    """
    sampler = SamplerKind(sampler)
    if bo_per_walker < 2 or walkers < 1:
        raise InvalidConfigError("strip displacement needs bo_per_walker >= 2 and walkers >= 1")
    stream = RandomStream(seed)
    total = 0.0
    for _ in range(walkers):
        if start is None:
            x0 = np.array([0.0, uniform_interval(stream, 0.0, 1.0)])
        else:
            x0 = np.asarray(start, dtype=float)
        if sampler == SamplerKind.BW:
            trajectory = billiard_trajectory(
                body, x0, body.random_direction(stream), max_bo=bo_per_walker,
                record=True, stop_on_nonsmooth=False, settings=settings)
            path = np.asarray(trajectory.points)
            total += float(np.sum(np.abs(np.diff(path[:, 0]))))
        else:
            x = x0.copy()
            for _ in range(bo_per_walker // 2):
                d = body.random_direction(stream)
                t_under, t_over = body.chord(x, d)
                step = uniform_interval(stream, t_under, t_over)
                total += abs(step * float(d[0]))
                x = x + step * d
    return total / (walkers * bo_per_walker)


def strip_efficiency_ratio(bo_per_walker: int) -> float:
    """BW / HR horizontal travel per BO for random lines: 6 (1 - 1 / (2N))"""
    return 6.0 * (1.0 - 1.0 / (2.0 * bo_per_walker))
