"""
Full-size scenario runs at their default parameters

Deselect with -m "not slow".
"""

import math

import numpy as np
import pytest

from bwalk.core.rng import RandomStream, trajectory_length, uniform01, unit_direction
from bwalk.schemas.experiments import Scenario
from bwalk.services.experiments import (
    CUSP_REFLECTION_REFERENCE,
    ExperimentService,
)

pytestmark = [pytest.mark.slow, pytest.mark.integration]


@pytest.fixture(scope="module")
def service():
    """Experiment service shared by the long runs"""
    return ExperimentService()


def _check(report, name):
    return next(check for check in report.checks if check.name == name)


class TestRandomStreamMoments:
    """Test the variates over a million draws"""

    def test_uniform_moments(self):
        """Test mean and variance of uniform01"""
        stream = RandomStream(101)
        draws = np.array([uniform01(stream) for _ in range(1_000_000)])
        assert np.all((draws > 0.0) & (draws <= 1.0))
        assert draws.mean() == pytest.approx(0.5, abs=0.002)
        assert draws.var() == pytest.approx(1.0 / 12.0, abs=0.001)

    def test_trajectory_length_moments(self):
        """Test exponential lengths have mean and standard deviation tau"""
        stream = RandomStream(102)
        lengths = np.array([trajectory_length(stream, 2.0) for _ in range(1_000_000)])
        assert lengths.mean() == pytest.approx(2.0, rel=0.01)
        assert lengths.std() == pytest.approx(2.0, rel=0.01)

    def test_direction_second_moment(self):
        """Test unit directions are isotropic in R^10"""
        stream = RandomStream(103)
        directions = np.array([unit_direction(stream, 10) for _ in range(100_000)])
        assert np.abs(directions.mean(axis=0)).max() < 0.01
        assert np.allclose((directions ** 2).mean(axis=0), 0.1, atol=0.005)


class TestCornerEscape:
    """Test escape from the angle, the orthant and the cusp"""

    def test_angle_defaults(self, service):
        """Test bounds, half-bound means and HR escape laws for the four openings"""
        report = service.run_scenario(Scenario(name="angle"))
        for k in (2, 4, 10, 50):
            assert report.metrics[f"pi/{k}.bw_max"] <= k
            assert _check(report, f"pi/{k}.bw_mean").passed
        assert report.passed

    def test_orthant_bound_up_to_fifty(self, service):
        """Test no BW trajectory needs more than n reflections to leave the orthant"""
        report = service.run_scenario(Scenario(name="orthant", parameters={"hr_dims": [2]}))
        for n in range(2, 51):
            assert _check(report, f"n={n}.bw_max").passed

    def test_orthant_hr_laws(self, service):
        """Test HR escape frequencies for n <= 8 against the closed-form laws"""
        report = service.run_scenario(Scenario(name="orthant", parameters={
            "bw_dims": [2], "sigmas": 4.0}))
        for n in range(2, 9):
            for name in ("hr_step_1", "hr_within_2", "hr_within_n"):
                assert _check(report, f"n={n}.{name}").passed

    @pytest.mark.parametrize("eps", [
        eps for eps, reference in CUSP_REFLECTION_REFERENCE.items() if reference is not None])
    def test_cusp_reflection_counts(self, service, eps):
        """Test deep cusp trajectories reproduce the published reflection counts"""
        report = service.run_scenario(Scenario(name="cusp", parameters={"epsilons": [eps]}))
        key = f"eps={eps:g}"
        assert report.metrics[f"{key}.censored"] == 0.0
        assert _check(report, f"{key}.reflections").passed

    def test_cusp_deepest_start(self, service):
        """Test the deepest start ends by length after more reflections than any other"""
        report = service.run_scenario(Scenario(name="cusp", parameters={"epsilons": [1.01e-4]}))
        assert report.metrics["eps=0.000101.censored"] == 0.0
        assert report.diagnostics["eps=0.000101"]["reason"] == "length"
        check = _check(report, "eps=0.000101.reflections")
        assert check.passed
        assert "exceeded 5e6 reflections" in check.detail

    def test_cusp_growth_over_table(self, service):
        """Test the fitted reflection growth over the published starts"""
        report = service.run_scenario(Scenario(name="cusp", parameters={
            "epsilons": [1e-3, 5e-4, 4e-4, 3e-4, 2e-4, 1.1e-4]}))
        assert report.metrics["growth_exponent"] == pytest.approx(-1.31, abs=0.1)


class TestUniformity:
    """Test cube, simplex, strip and toroid scenarios at full size"""

    def test_cube_ten_dimensions(self, service):
        """Test the BW sample count and the cell-transition pattern at 20000 BO"""
        report = service.run_scenario(Scenario(name="cube"))
        assert report.config["max_reflections"] == 100
        assert report.config["tau"] == pytest.approx(math.sqrt(10.0))
        assert _check(report, "bw_samples").passed
        assert report.metrics["hr_samples"] == 10_000.0
        assert _check(report, "bw_leave").passed
        assert _check(report, "hr_stay").passed
        assert report.metrics["bw_slab_passes"] > report.metrics["hr_slab_passes"]

    def test_cube_fifty_dimensions(self, service):
        """Test BW leaves its cell while HR stays in the samples protocol"""
        report = service.run_scenario(Scenario(name="cube", parameters={
            "n": 50, "protocol": "samples"}))
        assert report.metrics["bw_samples"] == 1000.0
        assert _check(report, "bw_leave").passed
        assert _check(report, "hr_stay").passed

    def test_simplex_tables(self, service):
        """Test BW chi-square statistics stay below HR ones over twenty seeds"""
        report = service.run_scenario(Scenario(name="simplex"))
        assert report.metrics["hr_samples_mean"] == 10_000.0
        assert report.metrics["bw_samples_mean"] >= 500.0
        for partition in ("nested", "vertex"):
            assert (report.metrics[f"bw_{partition}_median"]
                    < report.metrics[f"hr_{partition}_median"])

    def test_simplex_figure(self, service):
        """Test BW is closer to the nested-simplex law than HR in fifty dimensions"""
        report = service.run_scenario(Scenario(name="simplex", parameters={"mode": "figure"}))
        assert _check(report, "bw_closer_share").passed

    def test_strip(self, service):
        """Test BW travels about six times farther per oracle call"""
        report = service.run_scenario(Scenario(name="strip"))
        assert report.metrics["theory_ratio"] == pytest.approx(5.97)
        assert _check(report, "ratio").passed

    def test_toroid_tube_length(self, service):
        """Test tau = 2r meets the published oracle cost"""
        report = service.run_scenario(Scenario(name="toroid", parameters={"tau_rule": "tube"}))
        assert _check(report, "path_bound").passed
        assert _check(report, "bw_bo_calls").passed
        assert "expected to fail" in _check(report, "bw_angular_passed").detail
