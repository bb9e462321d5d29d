"""
Billiard Walk and Hit-and-Run Markov chains.

This module implements the two samplers and their cost accounting:
- billiard_trajectory: pure specular-reflection propagation along a ray
- bw_step: one Billiard Walk transition with nonsmooth / reflection-cap restarts
- hr_step: one Hit-and-Run transition (uniform point on a random chord)
- cube_bw_step: closed-form Billiard Walk endpoint in the unit cube
- run_chain / run_chains: budgeted chains with RunReport output

Design Principles:
- A chain is strictly sequential and owns its RandomStream
- Every Boundary Oracle query is counted; Hit-and-Run is charged two per sample
- Bodies are shared read-only between concurrent chains
"""

import logging
import math
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from bwalk.core.config import Settings, get_settings
from bwalk.core.exceptions import (
    InvalidConfigError,
    PathologicalGeometryError,
    PreconditionError,
    UnsupportedBodyError,
)
from bwalk.core.rng import RandomStream, trajectory_length, uniform_interval
from bwalk.geometry.base import ESCAPED, Body
from bwalk.schemas.sampling import (
    Budget,
    RunReport,
    SamplerConfig,
    SamplerKind,
    TerminationReason,
)

logger = logging.getLogger(__name__)

HR_BO_PER_SAMPLE = 2
_HR_REDRAW_LIMIT = 64


@dataclass
class ChainState:
    """Mutable state of one chain; `current` is always strictly interior"""

    current: np.ndarray
    bo_calls: int = 0
    oracle_calls: int = 0
    reflections_last: int = 0
    restarts_last: int = 0
    length_redraws_last: int = 0
    samples_emitted: int = 0


@dataclass
class Trajectory:
    """Result of billiard propagation"""

    end: np.ndarray
    direction: np.ndarray
    length: float
    reflections: int
    bo_calls: int
    reason: TerminationReason
    points: List[np.ndarray] = field(default_factory=list)


def make_sampler_config(
    body: Body,
    tau: Optional[float] = None,
    max_reflections: Optional[int] = None,
    seed: Optional[int] = None,
    settings: Optional[Settings] = None,
    length_redraw_after: Optional[int] = None,
) -> SamplerConfig:
    """
    Resolve a SamplerConfig with the body defaults: tau = diameter estimate,
    R = DEFAULT_REFLECTIONS_PER_DIM * n (n the intrinsic dimension), and the
    LENGTH_REDRAW_AFTER restart policy.
    """
    settings = settings or get_settings()
    if tau is None:
        if body.diameter is None:
            raise InvalidConfigError(f"{body.name} is unbounded: tau must be supplied")
        tau = body.diameter
    if max_reflections is None:
        max_reflections = settings.sampler.DEFAULT_REFLECTIONS_PER_DIM * body.intrinsic_dimension
    if seed is None:
        seed = settings.sampler.DEFAULT_SEED
    if length_redraw_after is None:
        length_redraw_after = settings.sampler.LENGTH_REDRAW_AFTER
    try:
        return SamplerConfig(tau=tau, max_reflections=max_reflections, seed=seed,
                             length_redraw_after=length_redraw_after)
    except ValidationError as e:
        raise InvalidConfigError(f"invalid sampler configuration: {e}") from e


def billiard_trajectory(
    body: Body,
    x: np.ndarray,
    d: np.ndarray,
    length: float = math.inf,
    max_bo: Optional[int] = None,
    max_reflections: Optional[int] = None,
    record: bool = False,
    stop_on_nonsmooth: bool = True,
    settings: Optional[Settings] = None,
) -> Trajectory:
    """
    Propagate a billiard from x along d for the given arclength.

    Each oracle query costs one BO call, including the last one that proves
    the remaining length ends before the boundary. Grazing hits keep the
    direction but still count as reflections. The propagation stops early
    on a nonsmooth hit (unless disabled), at the reflection cap (before the
    reflection that would exceed it), when the BO budget is spent, when the
    ray escapes, or when the reflected point drifts out of the body beyond
    tolerance.
    """
    sampler = (settings or get_settings()).sampler
    pos = np.array(x, dtype=float)
    direction = np.array(d, dtype=float)
    remaining = float(length)
    travelled = 0.0
    reflections = 0
    bo_calls = 0
    points = [pos.copy()] if record else []

    def finish(reason: TerminationReason) -> Trajectory:
        return Trajectory(pos, direction, travelled, reflections, bo_calls, reason, points)

    while True:
        if max_bo is not None and bo_calls >= max_bo:
            return finish(TerminationReason.BO_BUDGET)

        hit = body._exit(pos, direction)
        bo_calls += 1
        if hit is ESCAPED:
            return finish(TerminationReason.ESCAPED)

        if hit.t >= remaining:
            pos = pos + remaining * direction
            travelled += remaining
            if record:
                points.append(pos.copy())
            return finish(TerminationReason.LENGTH)

        pos = pos + hit.t * direction
        travelled += hit.t
        remaining -= hit.t
        if record:
            points.append(pos.copy())

        if stop_on_nonsmooth and not hit.smooth:
            return finish(TerminationReason.NONSMOOTH)
        if max_reflections is not None and reflections >= max_reflections:
            return finish(TerminationReason.REFLECTION_CAP)

        s = hit.normal
        incidence = float(direction @ s)
        if abs(incidence) > sampler.GRAZING_TOLERANCE:
            direction = direction - 2.0 * incidence * s
            direction /= np.linalg.norm(direction)
        reflections += 1

        # reflection points within DRIFT_TOLERANCE of the body are nudged inward
        if not body.contains(pos):
            if body.contains(pos + body.eps_fwd * s):
                pos = pos + body.eps_fwd * s
            elif body.contains(pos + sampler.DRIFT_TOLERANCE * s):
                pos = pos + sampler.DRIFT_TOLERANCE * s
            else:
                logger.warning(
                    f"Reflection point drifted out of the {body.name}; restarting trajectory")
                return finish(TerminationReason.DRIFT)


def bw_step(
    body: Body,
    state: ChainState,
    stream: RandomStream,
    cfg: SamplerConfig,
    settings: Optional[Settings] = None,
) -> np.ndarray:
    """
    One Billiard Walk transition from state.current.

    The trajectory length is drawn once; a nonsmooth hit, the reflection cap
    or numerical drift discards the partial path and restarts from the same
    point with a fresh direction and the same length. After
    cfg.length_redraw_after consecutive reflection-cap restarts the length
    itself is redrawn (never when the policy is 0).
    """
    settings = settings or get_settings()
    if not body.bounded:
        raise UnsupportedBodyError(f"Billiard Walk needs a bounded body, got {body.name}")

    ell = trajectory_length(stream, cfg.tau)
    restarts = 0
    capped_in_row = 0
    redraws = 0
    while True:
        d = body.random_direction(stream)
        trajectory = billiard_trajectory(
            body, state.current, d, length=ell,
            max_reflections=cfg.max_reflections,
            max_bo=settings.sampler.BO_SAFETY_CAP,
            settings=settings,
        )
        state.bo_calls += trajectory.bo_calls
        state.oracle_calls += trajectory.bo_calls
        if trajectory.reason == TerminationReason.LENGTH and body.contains(trajectory.end):
            break

        restarts += 1
        logger.debug(
            f"Restart {restarts} after {trajectory.reason.value} "
            f"({trajectory.reflections} reflections)")
        if trajectory.reason == TerminationReason.REFLECTION_CAP:
            capped_in_row += 1
        else:
            capped_in_row = 0
        if cfg.length_redraw_after and capped_in_row >= cfg.length_redraw_after:
            logger.debug(f"Length {ell:.4g} redrawn after {capped_in_row} capped restarts")
            ell = trajectory_length(stream, cfg.tau)
            capped_in_row = 0
            redraws += 1
        if restarts > settings.sampler.RESTART_CAP:
            diagnostics = {
                "restarts": restarts,
                "last_reason": trajectory.reason.value,
                "last_reflections": trajectory.reflections,
                "point": state.current.tolist(),
                "length": ell,
                "length_redraws": redraws,
            }
            logger.error(f"Restart cap exceeded at {state.current.tolist()}")
            raise PathologicalGeometryError(
                f"more than {settings.sampler.RESTART_CAP} restarts for one sample",
                diagnostics=diagnostics,
            )

    state.current = trajectory.end
    state.reflections_last = trajectory.reflections
    state.restarts_last = restarts
    state.length_redraws_last = redraws
    state.samples_emitted += 1
    return state.current


def hr_step(body: Body, state: ChainState, stream: RandomStream) -> np.ndarray:
    """One Hit-and-Run transition: uniform point on a random chord"""
    if not body.bounded:
        raise UnsupportedBodyError(f"Hit-and-Run needs a bounded body, got {body.name}")
    d = body.random_direction(stream)
    t_under, t_over = body.chord(state.current, d)
    state.bo_calls += HR_BO_PER_SAMPLE
    state.oracle_calls += 1
    if not (math.isfinite(t_under) and math.isfinite(t_over)):
        raise UnsupportedBodyError(f"chord of the {body.name} is unbounded")

    for _ in range(_HR_REDRAW_LIMIT):
        y = state.current + uniform_interval(stream, t_under, t_over) * d
        if body.contains(y):
            break
    else:
        raise PathologicalGeometryError(
            "no interior point found on the chord",
            diagnostics={"point": state.current.tolist(), "chord": [t_under, t_over]},
        )

    state.current = y
    state.reflections_last = 0
    state.restarts_last = 0
    state.length_redraws_last = 0
    state.samples_emitted += 1
    return y


def cube_bw_step(x: np.ndarray, l: float, d: np.ndarray) -> np.ndarray:
    """
    Billiard Walk endpoint in the unit cube by unfolding the reflections:
    k_i = floor(x_i + l d_i); y_i is the fractional part when k_i is even
    and one minus it when k_i is odd.
    """
    z = np.asarray(x, dtype=float) + l * np.asarray(d, dtype=float)
    k = np.floor(z)
    frac = z - k
    return np.where(np.mod(k, 2.0) == 0.0, frac, 1.0 - frac)


def _histogram(values: Sequence[int]) -> dict:
    return dict(sorted(Counter(values).items()))


def run_chain(
    body: Body,
    sampler: Union[SamplerKind, str],
    cfg: SamplerConfig,
    budget: Budget,
    start: Optional[np.ndarray] = None,
    chain_index: Optional[int] = None,
    retain_samples: bool = True,
    settings: Optional[Settings] = None,
) -> RunReport:
    """
    Run one chain until the budget is exhausted.

    Under a BO budget the chain stops after the first sample whose
    completion meets or exceeds the budget; the overshoot is reported.
    """
    settings = settings or get_settings()
    sampler = SamplerKind(sampler)
    stream = RandomStream(cfg.seed, chain_index=chain_index)
    x0 = body.interior_point() if start is None else np.asarray(start, dtype=float)
    if not body.contains(x0):
        raise PreconditionError(f"start point is not interior to the {body.name}")

    state = ChainState(current=x0.copy())
    samples: List[List[float]] = []
    reflections: List[int] = []
    restarts: List[int] = []
    length_redraws = 0
    started = time.perf_counter()

    def exhausted() -> bool:
        if budget.samples is not None:
            return state.samples_emitted >= budget.samples
        return state.bo_calls >= budget.bo_calls

    logger.info(f"Running {sampler.value.upper()} chain on {body.name} with budget "
                f"{budget.model_dump(exclude_none=True)}")
    while not exhausted():
        if sampler == SamplerKind.BW:
            y = bw_step(body, state, stream, cfg, settings=settings)
        else:
            y = hr_step(body, state, stream)
        reflections.append(state.reflections_last)
        restarts.append(state.restarts_last)
        length_redraws += state.length_redraws_last
        if retain_samples:
            samples.append(y.tolist())

    overshoot = max(0, state.bo_calls - budget.bo_calls) if budget.bo_calls is not None else 0
    logger.info(f"Chain finished: {state.samples_emitted} samples, {state.bo_calls} BO calls")
    return RunReport(
        sampler=sampler,
        body=body.describe(),
        config=cfg.model_dump(),
        rng=stream.identity,
        budget=budget.model_dump(exclude_none=True),
        start=x0.tolist(),
        samples=samples if retain_samples else None,
        n_samples=state.samples_emitted,
        bo_calls=state.bo_calls,
        oracle_calls=state.oracle_calls,
        bo_overshoot=overshoot,
        reflections=reflections,
        restarts=restarts,
        length_redraws=length_redraws,
        reflection_histogram=_histogram(reflections),
        restart_histogram=_histogram(restarts),
        wall_time=time.perf_counter() - started,
    )


def run_chains(
    body: Body,
    sampler: Union[SamplerKind, str],
    cfg: SamplerConfig,
    budget: Budget,
    chains: int,
    workers: Optional[int] = None,
    start: Optional[np.ndarray] = None,
    retain_samples: bool = True,
    settings: Optional[Settings] = None,
) -> List[RunReport]:
    """Independent chains on sibling streams, reported in chain order"""
    settings = settings or get_settings()
    if chains < 1:
        raise InvalidConfigError("chains must be at least 1")
    workers = workers or settings.app.WORKERS

    def one(index: int) -> RunReport:
        return run_chain(body, sampler, cfg, budget, start=start, chain_index=index,
                         retain_samples=retain_samples, settings=settings)

    if workers == 1:
        return [one(i) for i in range(chains)]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(one, range(chains)))
