"""
Experiment Service for the bwalk sampler

This module runs the built-in scenarios end to end:
- Corner escape in plane angles and orthants (BW reflections, HR iterations,
  HR analytic escape laws)
- Deep trajectories into the concave cusp
- Horizontal travel in the long strip
- Uniformity and serial correlation in the unit cube
- Nested-shell and vertex-cell uniformity in the standard simplex
- Sampling cost and angular uniformity in the toroid
- Nonsmooth restarts in the truncated ellipses
- Dikin rounding of an ill-shaped box
- Custom sampling of any body descriptor

Design Principles:
- Every scenario is reproducible from its seed; sub-experiments draw from
  labelled seeds derived from it
- Metrics are flat name -> value maps; checks compare them to expectations
- Parameters are validated before anything runs
"""

import logging
import math
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from bwalk.core.config import Settings, get_settings
from bwalk.core.exceptions import InvalidConfigError, UnsupportedBodyError
from bwalk.core.rng import GENERATOR_NAME, RandomStream, derive_seed, trajectory_length
from bwalk.geometry.base import toroid_path_bound
from bwalk.geometry.builder import build_body, parse_descriptor
from bwalk.geometry.polytope import Polytope, angle_triangle, axis_box, orthant, strip, unit_cube
from bwalk.geometry.special import TruncatedEllipse
from bwalk.schemas.bodies import (
    AxisBoxDescriptor,
    BodyDescriptor,
    StandardSimplexDescriptor,
    ToroidDescriptor,
    UnitCubeDescriptor,
)
from bwalk.schemas.diagnostics import AxisSlabs, CubeHalving, NestedSimplex
from bwalk.schemas.experiments import (
    SCENARIO_PARAMETERS,
    AngleParameters,
    BoxParameters,
    CubeParameters,
    CuspParameters,
    CustomParameters,
    EllipseParameters,
    Expectation,
    OrthantParameters,
    Scenario,
    ScenarioName,
    SimplexParameters,
    StripParameters,
    ToroidParameters,
)
from bwalk.schemas.sampling import Budget, RunReport, SamplerKind, TerminationReason
from bwalk.services.diagnostics import (
    angular_histogram,
    cell_transition_probabilities,
    chi_square_statistic,
    chi_square_test,
    escape_statistics,
    hr_angle_escape_law,
    hr_escape_frequency,
    hr_escape_iterations,
    hr_orthant_escape_law,
    hr_orthant_two_step_law,
    nested_simplex_counts,
    nested_simplex_fraction,
    simplex_vertex_cells,
    slab_histogram,
    strip_displacement,
    strip_efficiency_ratio,
    uniform_reference_samples,
)
from bwalk.services.precondition import DikinMap, barrier_hessian, dikin_map, transform_polytope
from bwalk.services.samplers import (
    billiard_trajectory,
    make_sampler_config,
    run_chain,
    run_chains,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Published mean escape counts over 5000 runs per opening pi/k: BW reflections, HR
# iterations. The BW column exceeds the hard bound at pi/2, so both are reported only.
ANGLE_ESCAPE_REFERENCE: Dict[int, Tuple[float, float]] = {
    2: (2.28, 2.37),
    4: (3.08, 3.75),
    10: (5.94, 8.23),
    50: (25.08, 39.25),
}
# BW reflections to leave the angle average half the bound ceil(pi / alpha)
ANGLE_HALF_BOUND_TOLERANCE = 0.10

# Reflections of the unit-length cusp trajectory from (0.9, eps); None marks the
# published run that went past 5e6 reflections
CUSP_REFLECTION_REFERENCE: Dict[float, Optional[int]] = {
    1e-3: 746,
    5e-4: 1851,
    4e-4: 2480,
    3e-4: 3617,
    2e-4: 6158,
    1.1e-4: 13496,
    1.01e-4: None,
}
CUSP_DEEP_NOTE = (
    "published run exceeded 5e6 reflections; exact propagation keeps the smooth "
    "growth of the shallower starts and ends by length")

CUBE_BW_SAMPLES_REFERENCE = 2148
CUBE_REFERENCE_TOLERANCE = 0.15
STRIP_EFFICIENCY_REFERENCE = 6.0
TOROID_BO_REFERENCE = 1764
TOROID_REFERENCE_TOLERANCE = 0.15
TOROID_DIAMETER_NOTE = (
    "tau = diameter: about three times the 1764 BO reference is spent and the "
    "statistic sits near the upper band edge at 500 samples; run with "
    "tau_rule=tube to check the cost")
TOROID_TUBE_NOTE = (
    "tau = 2r meets the 1764 BO reference but the 500 samples do not cover "
    "the angle; this check is expected to fail")
LEAVE_FLOOR = 0.8
STAY_FLOOR = 0.5
ROUNDED_CONDITION_CEILING = 1.0 + 1e-6


@dataclass
class ScenarioOutcome:
    """Raw result of one scenario runner before checks are applied"""

    metrics: Dict[str, Any] = field(default_factory=dict)
    expectations: Dict[str, Expectation] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    runs: Dict[str, RunReport] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    body: Optional[Dict[str, Any]] = None

    def expect(self, name: str, **conditions: Any) -> None:
        self.expectations[name] = Expectation(**conditions)


def _number(value: Any) -> Optional[float]:
    return None if value is None else float(value)


def _angle_key(alpha: float) -> str:
    ratio = math.pi / alpha
    if abs(ratio - round(ratio)) < 1e-9:
        return f"pi/{round(ratio)}"
    return f"alpha={alpha:.6g}"


def _lookup(table: Dict[float, Any], key: float) -> Tuple[bool, Any]:
    for known, value in table.items():
        if math.isclose(known, key, rel_tol=1e-9):
            return True, value
    return False, None


def _share(flags: Sequence[bool]) -> float:
    return float(np.mean(flags)) if len(flags) else math.nan


class ExperimentService:
    """
    Runner for the built-in scenarios and for plain sampling runs

    Features:
    - Per-scenario parameter validation
    - Seed-derived, order-independent sub-experiments
    - Built-in expected values with per-scenario overrides
    - Optional Dikin preconditioning for polytope sampling
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self._runners: Dict[ScenarioName, Callable[[Any, int], ScenarioOutcome]] = {
            ScenarioName.ANGLE: self._run_angle,
            ScenarioName.ORTHANT: self._run_orthant,
            ScenarioName.CUSP: self._run_cusp,
            ScenarioName.STRIP: self._run_strip,
            ScenarioName.CUBE: self._run_cube,
            ScenarioName.SIMPLEX: self._run_simplex,
            ScenarioName.TOROID: self._run_toroid,
            ScenarioName.ELLIPSE: self._run_ellipse,
            ScenarioName.BOX: self._run_box,
            ScenarioName.CUSTOM: self._run_custom,
        }

    # ------------------------------------------------------------------
    # public API
    # ------------------------------------------------------------------

    def list_experiments(self) -> List[Dict[str, Any]]:
        """Scenario names with their description and default parameters"""
        experiments = []
        for name, model in SCENARIO_PARAMETERS.items():
            try:
                defaults = model().model_dump(mode="json")
            except ValidationError:
                defaults = {}
            experiments.append({
                "name": name.value,
                "description": (model.__doc__ or "").strip(),
                "defaults": defaults,
            })
        return experiments

    def resolve_parameters(self, scenario: Scenario) -> BaseModel:
        """Validate the scenario parameters against the scenario's model"""
        model = SCENARIO_PARAMETERS[scenario.name]
        try:
            return model(**scenario.parameters)
        except ValidationError as e:
            raise InvalidConfigError(
                f"invalid parameters for scenario {scenario.name.value}: {e}") from e

    def run_scenario(self, scenario: Union[Scenario, Dict[str, Any]]) -> RunReport:
        """
        Run one scenario and check its metrics.

        Built-in expectations are merged with (and overridden by) the
        scenario's own `expected` map; a metric the run did not produce
        fails its check.
        """
        if not isinstance(scenario, Scenario):
            try:
                scenario = Scenario(**scenario)
            except ValidationError as e:
                raise InvalidConfigError(f"invalid scenario: {e}") from e
        params = self.resolve_parameters(scenario)
        seed = self.settings.sampler.DEFAULT_SEED if scenario.seed is None else scenario.seed

        logger.info(f"Running scenario {scenario.name.value} with seed {seed}")
        started = time.perf_counter()
        outcome = self._runners[scenario.name](params, seed)

        expectations = {**outcome.expectations, **(scenario.expected or {})}
        checks = [expectation.check(name, outcome.metrics.get(name))
                  for name, expectation in expectations.items()]
        runs = {
            key: run if scenario.retain_samples else run.model_copy(update={"samples": None})
            for key, run in outcome.runs.items()
        }
        report = RunReport(
            scenario={
                **scenario.model_dump(mode="json"),
                "resolved_parameters": params.model_dump(mode="json"),
            },
            body=outcome.body,
            config=outcome.config,
            rng={"seed": seed, "generator": GENERATOR_NAME},
            n_samples=sum(run.n_samples for run in runs.values()),
            bo_calls=sum(run.bo_calls for run in runs.values()),
            oracle_calls=sum(run.oracle_calls for run in runs.values()),
            length_redraws=sum(run.length_redraws for run in runs.values()),
            metrics=outcome.metrics,
            diagnostics=outcome.diagnostics,
            checks=checks,
            runs=runs,
            wall_time=time.perf_counter() - started,
        )

        failed = [check.name for check in checks if not check.passed]
        if failed:
            logger.warning(f"Scenario {scenario.name.value}: {len(failed)} of {len(checks)} "
                           f"checks failed ({', '.join(failed)})")
        else:
            logger.info(f"Scenario {scenario.name.value}: all {len(checks)} checks passed")
        return report

    def run_sampling(
        self,
        descriptor: Union[BodyDescriptor, Dict[str, Any], str],
        sampler: Union[SamplerKind, str],
        budget: Budget,
        tau: Optional[float] = None,
        max_reflections: Optional[int] = None,
        seed: Optional[int] = None,
        precondition: Optional[str] = None,
        start: Optional[Sequence[float]] = None,
        chains: int = 1,
        retain_samples: bool = True,
        length_redraw_after: Optional[int] = None,
    ) -> RunReport:
        """
        Sample a body described by a descriptor.

        With precondition="dikin" the chain runs on the rounded polytope and
        samples (and the start) are reported in the original coordinates.
        Body-specific uniformity diagnostics are attached to every chain.
        """
        descriptor = parse_descriptor(descriptor)
        body = build_body(descriptor)
        seed = self.settings.sampler.DEFAULT_SEED if seed is None else seed
        x0 = None if start is None else np.asarray(start, dtype=float)

        target = body
        dmap: Optional[DikinMap] = None
        if precondition == "dikin":
            if not isinstance(body, Polytope):
                raise UnsupportedBodyError(
                    f"Dikin preconditioning needs a polytope, got {descriptor.type}")
            dmap = dikin_map(body, settings=self.settings)
            target = transform_polytope(body, dmap)
            if x0 is not None:
                x0 = dmap.to_rounded(x0)
        elif precondition is not None:
            raise InvalidConfigError(f"unknown preconditioning {precondition!r}")

        cfg = make_sampler_config(target, tau, max_reflections, seed, settings=self.settings,
                                  length_redraw_after=length_redraw_after)
        if chains == 1:
            reports = [run_chain(target, sampler, cfg, budget, start=x0, settings=self.settings)]
        else:
            reports = run_chains(target, sampler, cfg, budget, chains, start=x0,
                                 settings=self.settings)

        finished = []
        for report in reports:
            if dmap is not None:
                report = report.model_copy(update={
                    "body": body.describe(),
                    "start": dmap.to_original(np.asarray(report.start)).tolist(),
                    "samples": dmap.to_original(
                        np.asarray(report.samples).reshape(-1, body.dimension)).tolist(),
                    "precondition": dmap.describe(),
                })
            diagnostics = self.sample_diagnostics(descriptor, report.samples or [])
            update: Dict[str, Any] = {"diagnostics": diagnostics}
            if not retain_samples:
                update["samples"] = None
            finished.append(report.model_copy(update=update))

        if chains == 1:
            return finished[0]
        return RunReport(
            sampler=SamplerKind(sampler),
            body=body.describe(),
            config=cfg.model_dump(),
            rng={"seed": seed, "generator": GENERATOR_NAME, "chains": chains},
            budget=budget.model_dump(exclude_none=True),
            n_samples=sum(r.n_samples for r in finished),
            bo_calls=sum(r.bo_calls for r in finished),
            oracle_calls=sum(r.oracle_calls for r in finished),
            bo_overshoot=sum(r.bo_overshoot for r in finished),
            length_redraws=sum(r.length_redraws for r in finished),
            precondition=dmap.describe() if dmap is not None else None,
            runs={f"chain_{i}": r for i, r in enumerate(finished)},
            wall_time=sum(r.wall_time for r in finished),
        )

    def sample_diagnostics(
        self, descriptor: BodyDescriptor, samples: Sequence[Sequence[float]]
    ) -> Dict[str, Any]:
        """Uniformity tests suited to the body type (cube, box, simplex, toroid)"""
        points = np.asarray(samples, dtype=float)
        if points.ndim != 2 or points.shape[0] < 2:
            return {}
        diagnostics: Dict[str, Any] = {}
        if isinstance(descriptor, (UnitCubeDescriptor, AxisBoxDescriptor)):
            if isinstance(descriptor, AxisBoxDescriptor):
                lower = np.asarray(descriptor.lower)
                points = (points - lower) / (np.asarray(descriptor.upper) - lower)
            slabs = self._slab_tests(points)
            diagnostics["slab_chi2"] = [s.model_dump() for s in slabs]
            diagnostics["slab_passes"] = sum(bool(s.passed) for s in slabs)
            if isinstance(descriptor, UnitCubeDescriptor) and descriptor.n <= 20:
                diagnostics["cell_transitions"] = cell_transition_probabilities(
                    points, CubeHalving(n=descriptor.n)).model_dump()
        elif isinstance(descriptor, StandardSimplexDescriptor):
            diagnostics["nested_simplex_chi2"] = chi_square_test(
                nested_simplex_counts(points, NestedSimplex(n=descriptor.n)),
                settings=self.settings).model_dump()
            diagnostics["vertex_cells_chi2"] = chi_square_test(
                simplex_vertex_cells(points, descriptor.n), settings=self.settings).model_dump()
        elif isinstance(descriptor, ToroidDescriptor):
            diagnostics["angular_chi2"] = chi_square_test(
                angular_histogram(points), settings=self.settings).model_dump()
        return diagnostics

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------

    def _fan_out(self, fn: Callable[[int], T], items: Iterable[int]) -> List[T]:
        """Map over independent sub-experiments, keeping their order"""
        items = list(items)
        workers = self.settings.app.WORKERS
        if workers == 1 or len(items) < 2:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(fn, items))

    def _slab_tests(self, points: np.ndarray, bins: int = 10):
        return [
            chi_square_test(slab_histogram(points, AxisSlabs(axis=axis, bins=bins)),
                            settings=self.settings)
            for axis in range(points.shape[1])
        ]

    # ------------------------------------------------------------------
    # scenarios
    # ------------------------------------------------------------------

    def _run_angle(self, p: AngleParameters, seed: int) -> ScenarioOutcome:
        """BW reflections and HR iterations to leave plane angles"""
        outcome = ScenarioOutcome(config={"start": p.start, "hr_reading": p.hr_reading,
                                          "trials": p.trials})
        start = np.asarray(p.start, dtype=float)
        for index, alpha in enumerate(p.alphas):
            key = _angle_key(alpha)
            body = angle_triangle(alpha)
            bw = escape_statistics(body, SamplerKind.BW, p.trials, derive_seed(seed, index, 0),
                                   start=start, cap=p.cap, settings=self.settings)
            hr = escape_statistics(body, SamplerKind.HR, p.trials, derive_seed(seed, index, 1),
                                   start=start, hr_reading=p.hr_reading, cap=p.cap,
                                   settings=self.settings)
            bound = math.ceil(math.pi / alpha - 1e-12)
            outcome.diagnostics[key] = {
                "bw": bw.model_dump(exclude={"counts"}),
                "hr": hr.model_dump(exclude={"counts"}),
                "bw_reflection_histogram": dict(sorted(Counter(bw.counts).items())),
            }
            metrics = outcome.metrics
            metrics[f"{key}.bw_mean"] = bw.mean
            metrics[f"{key}.bw_std"] = bw.std
            metrics[f"{key}.bw_max"] = _number(bw.max)
            metrics[f"{key}.bw_bo_mean"] = bw.bo_mean
            metrics[f"{key}.bw_bound"] = float(bound)
            metrics[f"{key}.bw_censored"] = float(bw.censored)
            metrics[f"{key}.hr_mean"] = hr.mean
            metrics[f"{key}.hr_std"] = hr.std
            metrics[f"{key}.hr_bo_mean"] = hr.bo_mean
            metrics[f"{key}.hr_censored"] = float(hr.censored)
            outcome.expect(f"{key}.bw_max", at_most=float(bound))

            for iterations in p.law_iterations:
                frequency = hr_escape_frequency(
                    body, iterations, p.law_trials, derive_seed(seed, index, 2, iterations),
                    start=start)
                law = hr_angle_escape_law(alpha, iterations)
                metrics[f"{key}.hr_escape_within_{iterations}"] = frequency
                metrics[f"{key}.hr_escape_law_{iterations}"] = law
                outcome.expect(f"{key}.hr_escape_within_{iterations}",
                               value=law, tolerance=p.law_tolerance)

            ratio = math.pi / alpha
            if abs(ratio - round(ratio)) < 1e-9:
                outcome.expect(f"{key}.bw_mean", value=bound / 2.0,
                               tolerance=ANGLE_HALF_BOUND_TOLERANCE, relative=True,
                               note="half the reflection bound")
                if round(ratio) in ANGLE_ESCAPE_REFERENCE:
                    bw_ref, hr_ref = ANGLE_ESCAPE_REFERENCE[round(ratio)]
                    metrics[f"{key}.bw_mean_table"] = bw_ref
                    metrics[f"{key}.hr_mean_table"] = hr_ref
        return outcome

    def _run_orthant(self, p: OrthantParameters, seed: int) -> ScenarioOutcome:
        """BW reflection bound and HR escape laws in the positive orthant"""
        outcome = ScenarioOutcome(config={"bw_trials": p.bw_trials, "hr_trials": p.hr_trials})
        for n in p.bw_dims:
            stats = escape_statistics(orthant(n), SamplerKind.BW, p.bw_trials,
                                      derive_seed(seed, 0, n), settings=self.settings)
            outcome.metrics[f"n={n}.bw_max"] = _number(stats.max)
            outcome.metrics[f"n={n}.bw_mean"] = stats.mean
            outcome.expect(f"n={n}.bw_max", at_most=float(n))

        def hr_laws(n: int) -> Dict[str, Tuple[float, float]]:
            first = hr_escape_iterations(orthant(n), n, p.hr_trials, derive_seed(seed, 1, n))
            return {
                "hr_step_1": (float(np.mean(first == 1)), hr_orthant_escape_law(n, 1)),
                "hr_within_2": (float(np.mean((first > 0) & (first <= 2))),
                                hr_orthant_two_step_law(n)),
                "hr_within_n": (float(np.mean(first > 0)), hr_orthant_escape_law(n, n)),
            }

        for n, laws in zip(p.hr_dims, self._fan_out(hr_laws, p.hr_dims)):
            for name, (frequency, law) in laws.items():
                sigma = math.sqrt(law * (1.0 - law) / p.hr_trials)
                outcome.metrics[f"n={n}.{name}"] = frequency
                outcome.metrics[f"n={n}.{name}_law"] = law
                outcome.expect(f"n={n}.{name}", value=law, tolerance=p.sigmas * sigma)
        return outcome

    def _run_cusp(self, p: CuspParameters, seed: int) -> ScenarioOutcome:
        """Reflections of deep cusp trajectories, or BW sampling in the cusp"""
        body = build_body({"type": "concave_cusp"})
        outcome = ScenarioOutcome(body=body.describe(), config={"mode": p.mode})

        if p.mode == "sample":
            cfg = make_sampler_config(body, tau=p.tau, seed=seed, settings=self.settings)
            report = run_chain(body, SamplerKind.BW, cfg, Budget(samples=p.samples),
                               settings=self.settings)
            outcome.runs["bw"] = report
            outcome.config.update(cfg.model_dump())
            outcome.metrics["mean_reflections"] = float(np.mean(report.reflections))
            outcome.metrics["mean_restarts"] = float(np.mean(report.restarts))
            outcome.metrics["length_redraws"] = float(report.length_redraws)
            outcome.metrics["bo_per_sample"] = report.bo_calls / report.n_samples
            return outcome

        cap = p.cap or self.settings.diagnostics.ESCAPE_TRIAL_CAP
        outcome.config.update({"length": p.length, "x_start": p.x_start, "cap": cap})
        for eps in p.epsilons:
            key = f"eps={eps:g}"
            start = np.array([p.x_start, eps])
            if not body.contains(start):
                raise InvalidConfigError(f"cusp start {start.tolist()} is not interior")
            trajectory = billiard_trajectory(
                body, start, np.array([-1.0, 0.0]), length=p.length, max_reflections=cap,
                stop_on_nonsmooth=False, settings=self.settings)
            censored = trajectory.reason == TerminationReason.REFLECTION_CAP
            if censored:
                logger.warning(f"Cusp trajectory at {key} censored after {cap} reflections")
            outcome.metrics[f"{key}.reflections"] = float(trajectory.reflections)
            outcome.metrics[f"{key}.censored"] = float(censored)
            outcome.diagnostics[key] = {
                "reason": trajectory.reason.value,
                "bo_calls": trajectory.bo_calls,
                "length": trajectory.length,
                "end": trajectory.end.tolist(),
            }
            known, reference = _lookup(CUSP_REFLECTION_REFERENCE, eps)
            if known and reference is None:
                deepest = max(v for v in CUSP_REFLECTION_REFERENCE.values() if v is not None)
                outcome.expect(f"{key}.reflections", at_least=float(deepest),
                               note=CUSP_DEEP_NOTE)
            elif known:
                outcome.expect(f"{key}.reflections", value=float(reference),
                               tolerance=p.tolerance, relative=True)

        finished = [(eps, outcome.metrics[f"eps={eps:g}.reflections"]) for eps in p.epsilons
                    if not outcome.metrics[f"eps={eps:g}.censored"]
                    and outcome.metrics[f"eps={eps:g}.reflections"] > 0]
        if len(finished) >= 2:
            log_eps, log_count = np.log(np.array(finished)).T
            outcome.metrics["growth_exponent"] = float(np.polyfit(log_eps, log_count, 1)[0])
        return outcome

    def _run_strip(self, p: StripParameters, seed: int) -> ScenarioOutcome:
        """BW / HR horizontal travel per BO call in the strip"""
        body = strip(p.M)
        outcome = ScenarioOutcome(body=body.describe(),
                                  config={"bo_per_walker": p.bo_per_walker, "walkers": p.walkers})
        bw = strip_displacement(body, SamplerKind.BW, p.bo_per_walker, p.walkers,
                                derive_seed(seed, 0), settings=self.settings)
        hr = strip_displacement(body, SamplerKind.HR, p.bo_per_walker, p.walkers,
                                derive_seed(seed, 1), settings=self.settings)
        outcome.metrics["bw_travel_per_bo"] = bw
        outcome.metrics["hr_travel_per_bo"] = hr
        outcome.metrics["ratio"] = bw / hr if hr > 0.0 else math.nan
        outcome.metrics["theory_ratio"] = strip_efficiency_ratio(p.bo_per_walker)
        outcome.expect("ratio", value=STRIP_EFFICIENCY_REFERENCE, tolerance=p.tolerance,
                       relative=True)
        return outcome

    def _run_cube(self, p: CubeParameters, seed: int) -> ScenarioOutcome:
        """Slab chi-square and cell transitions of BW vs HR in the unit cube"""
        body = unit_cube(p.n)
        tau = p.tau if p.tau is not None else math.sqrt(p.n)
        start = uniform_reference_samples("cube", p.n, 1, RandomStream(derive_seed(seed, 0)))[0]
        bw_cfg = make_sampler_config(body, tau, p.max_reflections, derive_seed(seed, 1),
                                     settings=self.settings)
        hr_cfg = make_sampler_config(body, tau, p.max_reflections, derive_seed(seed, 2),
                                     settings=self.settings)
        outcome = ScenarioOutcome(body=body.describe(), config={
            "protocol": p.protocol, "tau": tau, "max_reflections": bw_cfg.max_reflections,
            "start": start.tolist()})

        if p.protocol == "budget":
            bw_budget = hr_budget = Budget(bo_calls=p.bo_budget)
            bw = run_chain(body, SamplerKind.BW, bw_cfg, bw_budget, start=start,
                           settings=self.settings)
        else:
            bw = run_chain(body, SamplerKind.BW, bw_cfg, Budget(samples=p.bw_samples),
                           start=start, settings=self.settings)
            hr_budget = Budget(samples=math.ceil(bw.bo_calls / 2))
        hr = run_chain(body, SamplerKind.HR, hr_cfg, hr_budget, start=start, settings=self.settings)
        outcome.runs = {"bw": bw, "hr": hr}

        metrics = outcome.metrics
        for prefix, report in (("bw", bw), ("hr", hr)):
            points = np.asarray(report.samples)
            slabs = self._slab_tests(points, p.bins)
            transitions = cell_transition_probabilities(points, CubeHalving(n=p.n))
            passes = sum(bool(s.passed) for s in slabs)
            outcome.diagnostics[f"{prefix}_slab_chi2"] = [s.statistic for s in slabs]
            outcome.diagnostics[f"{prefix}_cell_transitions"] = transitions.model_dump()
            metrics[f"{prefix}_samples"] = float(report.n_samples)
            metrics[f"{prefix}_bo_calls"] = float(report.bo_calls)
            metrics[f"{prefix}_slab_passes"] = float(passes)
            metrics[f"{prefix}_slab_failures"] = float(len(slabs) - passes)
            metrics[f"{prefix}_leave"] = transitions.leave
            metrics[f"{prefix}_stay"] = transitions.stay
            metrics["reference_leave"] = transitions.reference_leave
            metrics["reference_stay"] = transitions.reference_stay
        metrics["bw_bo_overshoot"] = float(bw.bo_overshoot)

        required = float(math.ceil(p.pass_share * p.n))
        outcome.expect("bw_slab_passes", at_least=required)
        outcome.expect("hr_slab_failures", at_least=required)
        outcome.expect("bw_leave", at_least=LEAVE_FLOOR)
        outcome.expect("hr_stay", at_least=STAY_FLOOR)
        if (p.n == 10 and p.protocol == "budget" and p.bo_budget == 20_000
                and p.tau is None and p.max_reflections is None):
            outcome.expect("bw_samples", value=float(CUBE_BW_SAMPLES_REFERENCE),
                           tolerance=CUBE_REFERENCE_TOLERANCE, relative=True)
        return outcome

    def _run_simplex(self, p: SimplexParameters, seed: int) -> ScenarioOutcome:
        """Nested-shell / vertex-cell chi-square, or f(alpha) deviation, BW vs HR"""
        n = p.n if p.n is not None else (10 if p.mode == "tables" else 50)
        body = build_body({"type": "standard_simplex", "n": n})
        tau = p.tau if p.tau is not None else body.diameter
        redraw_after = (self.settings.sampler.LENGTH_REDRAW_AFTER
                        if p.length_redraw_after is None else p.length_redraw_after)
        outcome = ScenarioOutcome(body=body.describe(), config={
            "mode": p.mode, "tau": tau, "repeats": p.repeats,
            "length_redraw_after": redraw_after})

        def chains(repeat: int, budget: Budget) -> Tuple[RunReport, RunReport]:
            reports = []
            for which, sampler in enumerate((SamplerKind.BW, SamplerKind.HR)):
                cfg = make_sampler_config(body, tau, seed=derive_seed(seed, repeat, which),
                                          settings=self.settings,
                                          length_redraw_after=redraw_after)
                reports.append(run_chain(body, sampler, cfg, budget, settings=self.settings))
            return reports[0], reports[1]

        if p.mode == "tables":
            def table_repeat(repeat: int) -> Dict[str, Any]:
                bw, hr = chains(repeat, Budget(bo_calls=p.bo_budget))
                result: Dict[str, Any] = {"bw_report": bw, "hr_report": hr}
                for prefix, report in (("bw", bw), ("hr", hr)):
                    points = np.asarray(report.samples)
                    total = float(points.shape[0])
                    result[f"{prefix}_nested"] = chi_square_statistic(
                        nested_simplex_counts(points, NestedSimplex(n=n, levels=p.levels)),
                        total / p.levels).statistic
                    result[f"{prefix}_vertex"] = chi_square_statistic(
                        simplex_vertex_cells(points, n), total / (n + 1)).statistic
                    result[f"{prefix}_samples"] = report.n_samples
                return result

            results = self._fan_out(table_repeat, range(p.repeats))
            for repeat, result in enumerate(results):
                outcome.runs[f"bw_{repeat}"] = result.pop("bw_report")
                outcome.runs[f"hr_{repeat}"] = result.pop("hr_report")
            outcome.diagnostics["repeats"] = results
            metrics = outcome.metrics
            for partition in ("nested", "vertex"):
                bw_stats = [r[f"bw_{partition}"] for r in results]
                hr_stats = [r[f"hr_{partition}"] for r in results]
                metrics[f"bw_{partition}_median"] = float(np.median(bw_stats))
                metrics[f"hr_{partition}_median"] = float(np.median(hr_stats))
                metrics[f"bw_{partition}_below_share"] = _share(
                    [s < p.bw_threshold for s in bw_stats])
                metrics[f"hr_{partition}_above_share"] = _share(
                    [s > p.hr_threshold for s in hr_stats])
                outcome.expect(f"bw_{partition}_below_share", at_least=p.table_share)
                outcome.expect(f"hr_{partition}_above_share", at_least=p.table_share)
            metrics["bw_samples_mean"] = float(np.mean([r["bw_samples"] for r in results]))
            metrics["bw_length_redraws"] = float(sum(
                outcome.runs[f"bw_{repeat}"].length_redraws for repeat in range(p.repeats)))
            metrics["hr_samples_mean"] = float(np.mean([r["hr_samples"] for r in results]))
            return outcome

        alphas = np.linspace(0.0, 1.0 / (n + 1), p.grid + 1)

        def figure_repeat(repeat: int) -> Dict[str, Any]:
            bw, hr = chains(repeat, Budget(samples=p.samples))
            bw_curve, theory = nested_simplex_fraction(bw.samples, alphas)
            hr_curve, _ = nested_simplex_fraction(hr.samples, alphas)
            return {
                "bw_deviation": float(np.max(np.abs(bw_curve - theory))),
                "hr_deviation": float(np.max(np.abs(hr_curve - theory))),
                "curves": {"alpha": alphas.tolist(), "theory": theory.tolist(),
                           "bw": bw_curve.tolist(), "hr": hr_curve.tolist()},
                "bw_report": bw,
                "hr_report": hr,
            }

        results = self._fan_out(figure_repeat, range(p.repeats))
        for repeat, result in enumerate(results):
            outcome.runs[f"bw_{repeat}"] = result.pop("bw_report")
            outcome.runs[f"hr_{repeat}"] = result.pop("hr_report")
        outcome.diagnostics["curves"] = results[0]["curves"]
        outcome.diagnostics["deviations"] = [
            {"bw": r["bw_deviation"], "hr": r["hr_deviation"]} for r in results]
        outcome.metrics["bw_deviation_mean"] = float(np.mean([r["bw_deviation"] for r in results]))
        outcome.metrics["hr_deviation_mean"] = float(np.mean([r["hr_deviation"] for r in results]))
        outcome.metrics["bw_closer_share"] = _share(
            [r["bw_deviation"] < r["hr_deviation"] for r in results])
        outcome.expect("bw_closer_share", at_least=p.figure_share)
        return outcome

    def _run_toroid(self, p: ToroidParameters, seed: int) -> ScenarioOutcome:
        """BW cost and angular uniformity in the toroid, HR at the same BO cost"""
        body = build_body({"type": "toroid", "n": p.n, "r": p.r})
        if p.tau is not None:
            tau = p.tau
        elif p.tau_rule == "tube":
            tau = 2.0 * p.r
        else:
            tau = body.diameter
        bw_cfg = make_sampler_config(body, tau, p.max_reflections, derive_seed(seed, 0),
                                     settings=self.settings)
        hr_cfg = make_sampler_config(body, tau, p.max_reflections, derive_seed(seed, 1),
                                     settings=self.settings)
        bw = run_chain(body, SamplerKind.BW, bw_cfg, Budget(samples=p.bw_samples),
                       settings=self.settings)
        hr = run_chain(body, SamplerKind.HR, hr_cfg, Budget(samples=bw.bo_calls),
                       settings=self.settings)
        outcome = ScenarioOutcome(body=body.describe(), runs={"bw": bw, "hr": hr}, config={
            "tau": tau, "tau_rule": p.tau_rule, "max_reflections": bw_cfg.max_reflections})

        bound = toroid_path_bound(p.r)
        metrics = outcome.metrics
        metrics["path_bound"] = float(bound)
        metrics["bw_bo_calls"] = float(bw.bo_calls)
        metrics["bw_bo_per_sample"] = bw.bo_calls / bw.n_samples
        metrics["hr_samples"] = float(hr.n_samples)
        for prefix, report in (("bw", bw), ("hr", hr)):
            result = chi_square_test(angular_histogram(report.samples, p.bins),
                                     settings=self.settings)
            outcome.diagnostics[f"{prefix}_angular_chi2"] = result.model_dump()
            metrics[f"{prefix}_angular_chi2"] = result.statistic
            metrics[f"{prefix}_angular_passed"] = float(bool(result.passed))

        reference_case = (math.isclose(p.r, 1.0 / 3.0, rel_tol=1e-9) and p.n == 10
                          and p.bw_samples == 500 and p.tau is None
                          and p.max_reflections is None)
        if math.isclose(p.r, 1.0 / 3.0, rel_tol=1e-9):
            outcome.expect("path_bound", value=3.0)
        if reference_case:
            metrics["bw_bo_reference_ratio"] = bw.bo_calls / TOROID_BO_REFERENCE
        if reference_case and p.tau_rule == "tube":
            outcome.expect("bw_bo_calls", value=float(TOROID_BO_REFERENCE),
                           tolerance=TOROID_REFERENCE_TOLERANCE, relative=True)
            outcome.expect("bw_angular_passed", value=1.0, note=TOROID_TUBE_NOTE)
        elif reference_case:
            outcome.expect("bw_angular_passed", value=1.0, note=TOROID_DIAMETER_NOTE)
        else:
            outcome.expect("bw_angular_passed", value=1.0)
        return outcome

    def _run_ellipse(self, p: EllipseParameters, seed: int) -> ScenarioOutcome:
        """Nonsmooth hits from the focus vs from uniformly random starts"""
        outcome = ScenarioOutcome(config={"length": p.length, "focus_launches": p.focus_launches,
                                          "uniform_starts": p.uniform_starts})
        reflections = self.settings.sampler.DEFAULT_REFLECTIONS_PER_DIM * 2
        for index, variant in enumerate(p.variants):
            body = build_body({"type": "truncated_ellipse", "variant": variant})
            if not isinstance(body, TruncatedEllipse):
                raise UnsupportedBodyError(f"expected a truncated ellipse, got {body.name}")
            tau = p.tau if p.tau is not None else body.diameter

            stream = RandomStream(derive_seed(seed, index, 0))
            focus_reasons: Counter = Counter()
            for _ in range(p.focus_launches):
                trajectory = billiard_trajectory(
                    body, body.focus, body.random_direction(stream), length=p.length,
                    max_reflections=reflections, settings=self.settings)
                focus_reasons[trajectory.reason.value] += 1

            stream = RandomStream(derive_seed(seed, index, 1))
            uniform_reasons: Counter = Counter()
            for _ in range(p.uniform_starts):
                while True:
                    x = stream.generator.uniform([-2.0, -1.0], [2.0, 1.0])
                    if body.contains(x):
                        break
                ell = trajectory_length(stream, tau)
                trajectory = billiard_trajectory(
                    body, x, body.random_direction(stream), length=ell,
                    max_reflections=reflections, settings=self.settings)
                uniform_reasons[trajectory.reason.value] += 1

            nonsmooth = TerminationReason.NONSMOOTH.value
            outcome.diagnostics[variant] = {"focus": dict(focus_reasons),
                                            "uniform": dict(uniform_reasons)}
            outcome.metrics[f"{variant}.focus_nonsmooth_share"] = (
                focus_reasons[nonsmooth] / p.focus_launches)
            outcome.metrics[f"{variant}.uniform_nonsmooth"] = float(uniform_reasons[nonsmooth])
            outcome.expect(f"{variant}.focus_nonsmooth_share", at_least=1.0 / p.focus_launches)
            outcome.expect(f"{variant}.uniform_nonsmooth", value=0.0)
        return outcome

    def _run_box(self, p: BoxParameters, seed: int) -> ScenarioOutcome:
        """Slab chi-square in an ill-shaped box with and without Dikin rounding"""
        half = np.asarray(p.half_widths, dtype=float)
        body = axis_box(-half, half)
        dmap = dikin_map(body, settings=self.settings)
        rounded = transform_polytope(body, dmap)
        outcome = ScenarioOutcome(body=body.describe(), config={"sampler": p.sampler.value})

        plain_cfg = make_sampler_config(body, seed=derive_seed(seed, 0), settings=self.settings)
        plain = run_chain(body, p.sampler, plain_cfg, Budget(samples=p.samples),
                          settings=self.settings)
        dikin_cfg = make_sampler_config(rounded, seed=derive_seed(seed, 1), settings=self.settings)
        dikin = run_chain(rounded, p.sampler, dikin_cfg, Budget(samples=p.samples),
                          settings=self.settings)
        dikin = dikin.model_copy(update={
            "body": body.describe(),
            "start": dmap.to_original(np.asarray(dikin.start)).tolist(),
            "samples": dmap.to_original(np.asarray(dikin.samples)).tolist(),
            "precondition": dmap.describe(),
        })
        outcome.runs = {"plain": plain, "dikin": dikin}

        hessian = barrier_hessian(rounded, np.zeros(body.dimension))
        eigenvalues = np.linalg.eigvalsh(hessian)
        metrics = outcome.metrics
        metrics["original_condition"] = dmap.condition_number
        metrics["rounded_condition"] = float(eigenvalues[-1] / eigenvalues[0])
        for prefix, report in (("plain", plain), ("dikin", dikin)):
            points = (np.asarray(report.samples) + half) / (2.0 * half)
            slabs = self._slab_tests(points, p.bins)
            outcome.diagnostics[f"{prefix}_slab_chi2"] = [s.statistic for s in slabs]
            metrics[f"{prefix}_slab_passes"] = float(sum(bool(s.passed) for s in slabs))
            metrics[f"{prefix}_bo_per_sample"] = report.bo_calls / report.n_samples
            metrics[f"{prefix}_mean_restarts"] = float(np.mean(report.restarts))
        outcome.expect("rounded_condition", at_most=ROUNDED_CONDITION_CEILING)
        return outcome

    def _run_custom(self, p: CustomParameters, seed: int) -> ScenarioOutcome:
        """Plain sampling of a user-supplied body descriptor"""
        budget = Budget(samples=p.samples) if p.samples is not None else Budget(
            bo_calls=p.bo_budget)
        report = self.run_sampling(
            p.body, p.sampler, budget, tau=p.tau, max_reflections=p.max_reflections, seed=seed,
            precondition=p.precondition, start=p.start, chains=p.chains,
            length_redraw_after=p.length_redraw_after)
        outcome = ScenarioOutcome(body=report.body, config=report.config,
                                  runs={"chain": report})
        outcome.metrics["n_samples"] = float(report.n_samples)
        outcome.metrics["bo_calls"] = float(report.bo_calls)
        if report.n_samples:
            outcome.metrics["bo_per_sample"] = report.bo_calls / report.n_samples
        if report.reflections:
            outcome.metrics["mean_reflections"] = float(np.mean(report.reflections))
        if "slab_passes" in report.diagnostics:
            outcome.metrics["slab_passes"] = float(report.diagnostics["slab_passes"])
        outcome.diagnostics = report.diagnostics
        return outcome


# Global experiment service instance
_experiment_service: Optional[ExperimentService] = None


def get_experiment_service() -> ExperimentService:
    """Get or create global experiment service instance"""
    global _experiment_service

    if _experiment_service is None:
        _experiment_service = ExperimentService()

    return _experiment_service
