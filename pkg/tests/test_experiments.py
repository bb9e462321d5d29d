"""
Tests for the experiment service with small scenario parameters
"""

import math

import numpy as np
import pytest

from bwalk.core.exceptions import InvalidConfigError, UnsupportedBodyError
from bwalk.geometry import toroid_path_bound
from bwalk.schemas.experiments import Expectation, Scenario, ScenarioName
from bwalk.schemas.sampling import Budget
from bwalk.services.experiments import ExperimentService, get_experiment_service


@pytest.fixture
def service():
    """Experiment service on the default settings"""
    return ExperimentService()


def _check(report, name):
    return next(check for check in report.checks if check.name == name)


class TestExpectation:
    """Test metric checks"""

    def test_value_with_tolerance(self):
        """Test closeness checks"""
        expectation = Expectation(value=6.0, tolerance=0.2, relative=True)
        assert expectation.absolute_tolerance == pytest.approx(1.2)
        assert expectation.check("ratio", 5.0).passed
        assert not expectation.check("ratio", 4.0).passed

    def test_bounds(self):
        """Test one-sided checks"""
        assert Expectation(at_most=3.0).check("max", 3.0).passed
        assert not Expectation(at_least=0.8).check("leave", 0.5).passed

    def test_missing_metric(self):
        """Test an absent or NaN metric fails"""
        assert Expectation(value=1.0).check("x", None).detail == "metric not produced"
        assert not Expectation(value=1.0).check("x", math.nan).passed

    def test_needs_a_condition(self):
        """Test an empty expectation is rejected"""
        with pytest.raises(ValueError):
            Expectation(tolerance=1.0)

    def test_note_in_detail(self):
        """Test a note follows the condition text"""
        result = Expectation(at_least=2.0, note="deep start").check("reflections", 3.0)
        assert result.passed
        assert result.detail == "x >= 2; deep start"


class TestServiceApi:
    """Test listing and parameter validation"""

    def test_list_experiments(self, service):
        """Test every scenario is listed with its defaults"""
        listed = {e["name"]: e for e in service.list_experiments()}
        assert set(listed) == {name.value for name in ScenarioName}
        assert listed["strip"]["defaults"]["walkers"] == 10000
        assert listed["custom"]["defaults"] == {}

    def test_unknown_parameter(self, service):
        """Test parameters outside the scenario model are rejected"""
        with pytest.raises(InvalidConfigError):
            service.run_scenario({"name": "strip", "parameters": {"width": 3}})

    def test_invalid_scenario(self, service):
        """Test malformed scenario requests"""
        with pytest.raises(InvalidConfigError):
            service.run_scenario({"name": "no_such_scenario"})

    def test_singleton(self):
        """Test the global service instance"""
        assert get_experiment_service() is get_experiment_service()


class TestStripScenario:
    """Test the strip scenario and report plumbing"""

    PARAMETERS = {"M": 100.0, "bo_per_walker": 10, "walkers": 50}

    def test_metrics(self, service):
        """Test travel metrics and the theory ratio"""
        report = service.run_scenario(
            Scenario(name="strip", parameters=self.PARAMETERS, seed=1))
        assert report.metrics["bw_travel_per_bo"] > 0.0
        assert report.metrics["theory_ratio"] == pytest.approx(5.7)
        assert report.rng["seed"] == 1
        assert report.scenario["resolved_parameters"]["walkers"] == 50

    def test_deterministic(self, service):
        """Test the same seed reproduces the report"""
        scenario = Scenario(name="strip", parameters=self.PARAMETERS, seed=9)
        first = service.run_scenario(scenario).deterministic_dump()
        second = service.run_scenario(scenario).deterministic_dump()
        assert first == second

    def test_expectation_override(self, service):
        """Test scenario expectations replace the built-in ones"""
        report = service.run_scenario(Scenario(
            name="strip", parameters=self.PARAMETERS, seed=1,
            expected={"ratio": {"at_least": 1e9}}))
        assert not _check(report, "ratio").passed
        assert not report.passed

        report = service.run_scenario(Scenario(
            name="strip", parameters=self.PARAMETERS, seed=1,
            expected={"ratio": {"at_least": 0.0}, "no_such_metric": {"value": 1.0}}))
        assert _check(report, "ratio").passed
        assert _check(report, "no_such_metric").detail == "metric not produced"


class TestCornerScenarios:
    """Test angle, orthant and cusp scenarios"""

    def test_angle(self, service):
        """Test the reflection bound check in a pi/4 angle"""
        report = service.run_scenario(Scenario(name="angle", seed=2, parameters={
            "alphas": [math.pi / 4], "trials": 100, "law_iterations": [1],
            "law_trials": 500}))
        assert report.metrics["pi/4.bw_bound"] == 4.0
        assert _check(report, "pi/4.bw_max").passed
        assert "pi/4.hr_escape_within_1" in report.metrics
        assert report.metrics["pi/4.hr_escape_law_1"] == pytest.approx(0.25)

    def test_angle_mean_is_half_the_bound(self, service):
        """Test BW means are checked against half the bound, table values only reported"""
        report = service.run_scenario(Scenario(name="angle", seed=2, parameters={
            "alphas": [math.pi / 2, math.pi / 4], "trials": 2000, "law_iterations": [1],
            "law_trials": 500}))
        for key, bound in (("pi/2", 2.0), ("pi/4", 4.0)):
            check = _check(report, f"{key}.bw_mean")
            assert check.expected == pytest.approx(bound / 2.0)
            assert check.passed
            assert "half the reflection bound" in check.detail
            assert f"{key}.bw_mean_table" in report.metrics
            assert f"{key}.hr_mean_table" in report.metrics
        assert report.metrics["pi/2.bw_mean_table"] == pytest.approx(2.28)
        assert all(not check.name.endswith("hr_mean") for check in report.checks)

    def test_angle_without_table_entry(self, service):
        """Test angles outside pi/k carry only the hard bound"""
        report = service.run_scenario(Scenario(name="angle", seed=2, parameters={
            "alphas": [1.0], "trials": 50, "law_iterations": [1], "law_trials": 100}))
        names = {check.name for check in report.checks}
        assert "alpha=1.bw_max" in names
        assert "alpha=1.bw_mean" not in names

    def test_orthant(self, service):
        """Test the orthant reflection bound"""
        report = service.run_scenario(Scenario(name="orthant", seed=3, parameters={
            "bw_dims": [2, 3], "bw_trials": 50, "hr_dims": [2], "hr_trials": 500}))
        assert _check(report, "n=2.bw_max").passed
        assert _check(report, "n=3.bw_max").passed
        assert report.metrics["n=2.hr_step_1_law"] == pytest.approx(0.5)

    def test_cusp_table(self, service):
        """Test censoring at a small reflection cap"""
        report = service.run_scenario(Scenario(name="cusp", seed=4, parameters={
            "epsilons": [1e-3], "cap": 10}))
        reflections = report.metrics["eps=0.001.reflections"]
        censored = report.metrics["eps=0.001.censored"]
        assert reflections <= 10
        if censored:
            assert reflections == 10

    def test_cusp_sample(self, service):
        """Test plain sampling in the cusp"""
        report = service.run_scenario(Scenario(name="cusp", seed=4, parameters={
            "mode": "sample", "samples": 20}))
        assert report.runs["bw"].n_samples == 20
        assert report.runs["bw"].samples is None
        assert report.metrics["bo_per_sample"] >= 1.0
        assert report.metrics["length_redraws"] == float(report.length_redraws)
        assert report.config["length_redraw_after"] == 3

    def test_cusp_growth_exponent(self, service):
        """Test the reflection growth is fitted over finished starts"""
        report = service.run_scenario(Scenario(name="cusp", parameters={
            "epsilons": [1e-3, 5e-4, 4e-4]}))
        assert not any(report.metrics[f"eps={eps:g}.censored"] for eps in (1e-3, 5e-4, 4e-4))
        assert -1.6 < report.metrics["growth_exponent"] < -1.0

    def test_cusp_censored_start_left_out_of_fit(self, service):
        """Test a censored start neither fits the growth nor passes its check"""
        report = service.run_scenario(Scenario(name="cusp", parameters={
            "epsilons": [1e-3, 5e-4], "cap": 1000}))
        assert report.metrics["eps=0.0005.censored"] == 1.0
        assert "growth_exponent" not in report.metrics
        assert not _check(report, "eps=0.0005.reflections").passed


class TestUniformityScenarios:
    """Test cube, simplex, toroid, ellipse and box scenarios"""

    def test_cube(self, service):
        """Test budget accounting in a small cube"""
        report = service.run_scenario(Scenario(name="cube", seed=5, parameters={
            "n": 3, "bo_budget": 600}))
        assert report.metrics["hr_bo_calls"] == 600.0
        assert report.metrics["bw_bo_calls"] >= 600.0
        assert report.metrics["reference_stay"] == pytest.approx(0.125)
        assert set(report.runs) == {"bw", "hr"}

    def test_cube_samples_protocol(self, service):
        """Test HR receives the BW oracle cost in the samples protocol"""
        report = service.run_scenario(Scenario(name="cube", seed=5, parameters={
            "n": 3, "protocol": "samples", "bw_samples": 40}))
        assert report.metrics["bw_samples"] == 40.0
        assert report.metrics["hr_samples"] == math.ceil(report.metrics["bw_bo_calls"] / 2)

    def test_simplex_tables(self, service):
        """Test table metrics for a small simplex"""
        report = service.run_scenario(Scenario(name="simplex", seed=6, parameters={
            "n": 3, "bo_budget": 300, "repeats": 2}))
        for name in ("bw_nested_below_share", "hr_vertex_above_share"):
            assert 0.0 <= report.metrics[name] <= 1.0
        assert set(report.runs) == {"bw_0", "hr_0", "bw_1", "hr_1"}

    def test_simplex_figure(self, service):
        """Test deviation metrics for a small simplex"""
        report = service.run_scenario(Scenario(name="simplex", seed=6, parameters={
            "mode": "figure", "n": 3, "samples": 50, "repeats": 2}))
        assert 0.0 <= report.metrics["bw_deviation_mean"] <= 1.0
        assert len(report.diagnostics["curves"]["alpha"]) == 51

    def test_simplex_ten_dimensions_at_full_budget(self, service):
        """Test the n = 10 simplex at 20000 BO finishes with capped paths redrawn"""
        report = service.run_scenario(Scenario(name="simplex", seed=6, parameters={
            "n": 10, "bo_budget": 20_000, "repeats": 1}))
        assert report.config["length_redraw_after"] == 3
        assert report.config["tau"] == pytest.approx(math.sqrt(2.0))
        assert report.metrics["hr_samples_mean"] == 10_000.0
        assert report.metrics["bw_samples_mean"] >= 500.0
        assert report.metrics["bw_length_redraws"] >= 0.0
        assert report.runs["bw_0"].bo_calls >= 20_000

    def test_simplex_policy_override(self, service):
        """Test the scenario records a caller-chosen restart policy"""
        report = service.run_scenario(Scenario(name="simplex", seed=6, parameters={
            "n": 3, "bo_budget": 300, "repeats": 1, "length_redraw_after": 1}))
        assert report.config["length_redraw_after"] == 1
        assert report.runs["bw_0"].config["length_redraw_after"] == 1

    def test_toroid(self, service):
        """Test HR is given as many samples as BW spent oracle calls"""
        report = service.run_scenario(Scenario(name="toroid", seed=7, parameters={
            "n": 3, "r": 0.3, "bw_samples": 30}))
        assert report.metrics["path_bound"] == float(toroid_path_bound(0.3))
        assert report.metrics["hr_samples"] == report.metrics["bw_bo_calls"]

    def test_toroid_default_tau_is_diameter(self, service):
        """Test tau defaults to the body diameter and 2r is opt-in"""
        report = service.run_scenario(Scenario(name="toroid", seed=7, parameters={
            "n": 3, "r": 0.3, "bw_samples": 20}))
        assert report.config["tau"] == pytest.approx(report.body["diameter"])
        assert report.config["tau_rule"] == "diameter"
        assert "bw_bo_calls" not in {check.name for check in report.checks}

        tube = service.run_scenario(Scenario(name="toroid", seed=7, parameters={
            "n": 3, "r": 0.3, "bw_samples": 20, "tau_rule": "tube"}))
        assert tube.config["tau"] == pytest.approx(0.6)

    @pytest.mark.slow
    def test_toroid_reference_notes(self, service):
        """Test the reference case carries the documented outcome of each tau rule"""
        diameter = service.run_scenario(Scenario(name="toroid", seed=7, parameters={
            "bw_samples": 500}))
        assert _check(diameter, "path_bound").passed
        assert "tau_rule=tube" in _check(diameter, "bw_angular_passed").detail
        assert diameter.metrics["bw_bo_reference_ratio"] > 2.0

    def test_ellipse(self, service):
        """Test focus launches hit the corner and uniform starts do not"""
        report = service.run_scenario(Scenario(name="ellipse", seed=8, parameters={
            "variants": ["convex"], "focus_launches": 200, "uniform_starts": 100}))
        assert report.metrics["convex.focus_nonsmooth_share"] > 0.0
        assert report.metrics["convex.uniform_nonsmooth"] == 0.0

    def test_box(self, service):
        """Test Dikin rounding makes the box isotropic"""
        report = service.run_scenario(Scenario(name="box", seed=9, parameters={
            "half_widths": [1.0, 10.0], "samples": 100}))
        assert report.metrics["original_condition"] == pytest.approx(100.0)
        assert _check(report, "rounded_condition").passed
        assert set(report.runs) == {"plain", "dikin"}

    def test_custom(self, service):
        """Test a custom body with preconditioning"""
        report = service.run_scenario(Scenario(name="custom", seed=10, parameters={
            "body": {"type": "unit_cube", "n": 2}, "samples": 50, "precondition": "dikin"}))
        assert report.metrics["n_samples"] == 50.0
        assert "slab_passes" in report.metrics


class TestRunSampling:
    """Test plain sampling runs"""

    def test_dikin_samples_in_original_coordinates(self, service):
        """Test preconditioned samples are mapped back into the box"""
        report = service.run_sampling(
            {"type": "axis_box", "lower": [-1.0, -10.0], "upper": [1.0, 10.0]}, "bw",
            Budget(samples=100), seed=1, precondition="dikin")
        samples = np.asarray(report.samples)
        assert samples.shape == (100, 2)
        assert np.all(np.abs(samples[:, 0]) < 1.0)
        assert np.all(np.abs(samples[:, 1]) < 10.0)
        assert report.precondition["method"] == "dikin"
        assert report.body["type"] == "axis_box"
        assert "slab_passes" in report.diagnostics

    def test_dikin_needs_polytope(self, service):
        """Test rounding is refused for curved bodies"""
        with pytest.raises(UnsupportedBodyError):
            service.run_sampling({"type": "ball", "center": [0, 0], "radius": 1}, "bw",
                                 Budget(samples=5), precondition="dikin")

    def test_unknown_precondition(self, service):
        """Test unknown preconditioning names"""
        with pytest.raises(InvalidConfigError):
            service.run_sampling({"type": "unit_cube", "n": 2}, "bw", Budget(samples=5),
                                 precondition="john")

    def test_multiple_chains(self, service):
        """Test chain reports are aggregated"""
        report = service.run_sampling({"type": "standard_simplex", "n": 2}, "hr",
                                      Budget(samples=20), seed=2, chains=3)
        assert set(report.runs) == {"chain_0", "chain_1", "chain_2"}
        assert report.n_samples == 60
        assert "nested_simplex_chi2" in report.runs["chain_0"].diagnostics

    def test_drop_samples(self, service):
        """Test samples can be left out of the report"""
        report = service.run_sampling({"type": "toroid", "n": 3, "r": 0.5}, "bw",
                                      Budget(samples=10), seed=3, retain_samples=False)
        assert report.samples is None
        assert "angular_chi2" in report.diagnostics
