"""
Tests for the Billiard Walk and Hit-and-Run chains
"""

import math
from unittest.mock import patch

import numpy as np
import pytest

from bwalk.core.config import SamplerSettings, Settings
from bwalk.core.exceptions import (
    InvalidConfigError,
    PathologicalGeometryError,
    PreconditionError,
    UnsupportedBodyError,
)
from bwalk.core.rng import RandomStream, unit_direction
from bwalk.geometry import Ball, TruncatedEllipse, orthant, unit_cube
from bwalk.schemas.sampling import Budget, SamplerConfig, SamplerKind, TerminationReason
from bwalk.services.samplers import (
    HR_BO_PER_SAMPLE,
    ChainState,
    billiard_trajectory,
    bw_step,
    cube_bw_step,
    hr_step,
    make_sampler_config,
    run_chain,
    run_chains,
)

DIAGONAL = np.array([1.0, 1.0]) / math.sqrt(2.0)
EAST = np.array([1.0, 0.0])


class TestSamplerConfig:
    """Test default resolution of tau and the reflection cap"""

    def test_defaults(self, cube3):
        """Test tau defaults to the diameter and R to 10 n"""
        cfg = make_sampler_config(cube3)
        assert cfg.tau == pytest.approx(math.sqrt(3.0))
        assert cfg.max_reflections == 30
        assert cfg.seed == 20140101

    def test_unbounded_needs_tau(self, orthant3):
        """Test unbounded bodies have no default length scale"""
        with pytest.raises(InvalidConfigError):
            make_sampler_config(orthant3)

    def test_invalid_tau(self, cube3):
        """Test tau must be positive"""
        with pytest.raises(InvalidConfigError):
            make_sampler_config(cube3, tau=-1.0)

    def test_length_redraw_policy(self, cube3):
        """Test the restart policy defaults from settings and can be overridden"""
        assert make_sampler_config(cube3).length_redraw_after == 3
        settings = Settings(sampler=SamplerSettings(LENGTH_REDRAW_AFTER=7))
        assert make_sampler_config(cube3, settings=settings).length_redraw_after == 7
        assert make_sampler_config(cube3, length_redraw_after=0).length_redraw_after == 0
        with pytest.raises(InvalidConfigError):
            make_sampler_config(cube3, length_redraw_after=-1)


class TestBilliardTrajectory:
    """Test reflection propagation"""

    def test_single_reflection(self, square):
        """Test a trajectory bouncing once off x1 = 1"""
        trajectory = billiard_trajectory(square, np.array([0.5, 0.5]), EAST, length=1.2)
        assert trajectory.reason == TerminationReason.LENGTH
        assert trajectory.reflections == 1
        assert trajectory.bo_calls == 2
        assert np.allclose(trajectory.end, [0.3, 0.5], atol=1e-9)
        assert np.allclose(trajectory.direction, [-1.0, 0.0])

    def test_vertex_stops(self, square):
        """Test a vertex hit ends the trajectory unless disabled"""
        trajectory = billiard_trajectory(square, np.array([0.5, 0.5]), DIAGONAL, length=5.0)
        assert trajectory.reason == TerminationReason.NONSMOOTH
        assert trajectory.reflections == 0

    def test_reflection_cap(self, square):
        """Test the cap fires before the reflection that would exceed it"""
        trajectory = billiard_trajectory(square, np.array([0.5, 0.5]), EAST, length=10.0,
                                         max_reflections=3)
        assert trajectory.reason == TerminationReason.REFLECTION_CAP
        assert trajectory.reflections == 3

    def test_bo_budget(self, square):
        """Test propagation stops when the oracle budget is spent"""
        trajectory = billiard_trajectory(square, np.array([0.5, 0.5]), EAST, max_bo=5)
        assert trajectory.reason == TerminationReason.BO_BUDGET
        assert trajectory.bo_calls == 5

    def test_escape(self, orthant3):
        """Test an unbounded ray escapes after one oracle call"""
        trajectory = billiard_trajectory(orthant3, np.ones(3), np.ones(3) / math.sqrt(3.0))
        assert trajectory.reason == TerminationReason.ESCAPED
        assert trajectory.bo_calls == 1
        assert trajectory.reflections == 0

    def test_recorded_points(self, square):
        """Test recording keeps the start, each reflection and the end"""
        trajectory = billiard_trajectory(square, np.array([0.5, 0.5]), EAST, length=1.2,
                                         record=True)
        assert len(trajectory.points) == 3
        assert np.allclose(trajectory.points[1], [1.0, 0.5], atol=1e-9)

    def test_reversible_in_ball(self, stream):
        """Test reversing the final direction retraces the path"""
        ball = Ball([0.0, 0.0, 0.0], 1.0)
        for _ in range(20):
            x = 0.5 * unit_direction(stream, 3)
            forward = billiard_trajectory(ball, x, unit_direction(stream, 3), length=7.0)
            assert forward.reason == TerminationReason.LENGTH
            assert np.linalg.norm(forward.direction) == pytest.approx(1.0, abs=1e-12)
            back = billiard_trajectory(ball, forward.end, -forward.direction, length=7.0)
            assert np.allclose(back.end, x, atol=1e-8)
            assert back.reflections == forward.reflections

    @pytest.mark.parametrize("n", [2, 5, 10])
    def test_matches_cube_closed_form(self, n):
        """Test reflections in the cube against the unfolded endpoint"""
        cube = unit_cube(n)
        stream = RandomStream(n)
        compared = 0
        for _ in range(300):
            x = stream.generator.random(n) * 0.98 + 0.01
            d = unit_direction(stream, n)
            length = 3.0 * stream.generator.random()
            trajectory = billiard_trajectory(cube, x, d, length=length)
            if trajectory.reason != TerminationReason.LENGTH:
                continue
            compared += 1
            assert np.allclose(trajectory.end, cube_bw_step(x, length, d), atol=1e-9)
        assert compared >= 290


class TestCubeClosedForm:
    """Test the unfolded cube endpoint"""

    def test_even_and_odd_folds(self):
        """Test fractional parts fold back on odd crossings"""
        y = cube_bw_step(np.array([0.5, 0.5]), 1.2, EAST)
        assert np.allclose(y, [0.3, 0.5])
        y = cube_bw_step(np.array([0.5, 0.5]), 2.2, EAST)
        assert np.allclose(y, [0.7, 0.5])


class TestBilliardWalkStep:
    """Test one Billiard Walk transition"""

    def test_patched_step(self, square, stream):
        """Test the step with a fixed length and direction"""
        state = ChainState(current=np.array([0.5, 0.5]))
        cfg = make_sampler_config(square)
        with patch("bwalk.services.samplers.trajectory_length", return_value=1.2), \
                patch.object(square, "random_direction", return_value=EAST):
            y = bw_step(square, state, stream, cfg)
        assert np.allclose(y, [0.3, 0.5], atol=1e-9)
        assert state.bo_calls == 2
        assert state.reflections_last == 1
        assert state.restarts_last == 0
        assert state.samples_emitted == 1

    def test_restart_keeps_length(self, square, stream):
        """Test a vertex hit restarts with a new direction and the same length"""
        state = ChainState(current=np.array([0.5, 0.5]))
        cfg = SamplerConfig(tau=1.0, max_reflections=1, seed=1)
        with patch("bwalk.services.samplers.trajectory_length", return_value=1.2), \
                patch.object(square, "random_direction", side_effect=[DIAGONAL, EAST]):
            y = bw_step(square, state, stream, cfg)
        assert np.allclose(y, [0.3, 0.5], atol=1e-9)
        assert state.restarts_last == 1
        assert state.bo_calls == 3

    def test_restart_cap(self, square, stream):
        """Test endless restarts raise with diagnostics"""
        settings = Settings(sampler=SamplerSettings(RESTART_CAP=2))
        state = ChainState(current=np.array([0.5, 0.5]))
        cfg = SamplerConfig(tau=1.0, max_reflections=5, seed=1)
        with patch("bwalk.services.samplers.trajectory_length", return_value=1.2), \
                patch.object(square, "random_direction", return_value=DIAGONAL):
            with pytest.raises(PathologicalGeometryError) as exc_info:
                bw_step(square, state, stream, cfg, settings=settings)
        assert exc_info.value.diagnostics["restarts"] == 3
        assert exc_info.value.diagnostics["last_reason"] == TerminationReason.NONSMOOTH.value

    def test_length_redrawn_after_capped_restarts(self, square, stream):
        """Test the length is redrawn once the reflection cap fires twice in a row"""
        state = ChainState(current=np.array([0.5, 0.5]))
        cfg = SamplerConfig(tau=1.0, max_reflections=1, seed=1, length_redraw_after=2)
        with patch("bwalk.services.samplers.trajectory_length", side_effect=[5.0, 0.2]), \
                patch.object(square, "random_direction", return_value=EAST):
            y = bw_step(square, state, stream, cfg)
        # two capped paths of two BO calls each, then one call for the short length
        assert np.allclose(y, [0.7, 0.5], atol=1e-9)
        assert state.bo_calls == 5
        assert state.restarts_last == 2
        assert state.length_redraws_last == 1

    def test_nonsmooth_restart_resets_cap_count(self, square, stream):
        """Test only consecutive reflection-cap restarts trigger a redraw"""
        settings = Settings(sampler=SamplerSettings(RESTART_CAP=3))
        state = ChainState(current=np.array([0.5, 0.5]))
        cfg = SamplerConfig(tau=1.0, max_reflections=1, seed=1, length_redraw_after=2)
        with patch("bwalk.services.samplers.trajectory_length", return_value=5.0) as length, \
                patch.object(square, "random_direction",
                             side_effect=[EAST, DIAGONAL, EAST, DIAGONAL]):
            with pytest.raises(PathologicalGeometryError) as exc_info:
                bw_step(square, state, stream, cfg, settings=settings)
        assert length.call_count == 1
        assert exc_info.value.diagnostics["length_redraws"] == 0

    def test_keep_length_policy(self, square, stream):
        """Test a zero policy keeps the drawn length until the restart cap"""
        settings = Settings(sampler=SamplerSettings(RESTART_CAP=3))
        state = ChainState(current=np.array([0.5, 0.5]))
        cfg = SamplerConfig(tau=1.0, max_reflections=1, seed=1, length_redraw_after=0)
        with patch("bwalk.services.samplers.trajectory_length", return_value=5.0) as length, \
                patch.object(square, "random_direction", return_value=EAST):
            with pytest.raises(PathologicalGeometryError) as exc_info:
                bw_step(square, state, stream, cfg, settings=settings)
        assert length.call_count == 1
        assert exc_info.value.diagnostics["length_redraws"] == 0
        assert exc_info.value.diagnostics["last_reason"] == TerminationReason.REFLECTION_CAP.value

    def test_unbounded_body(self, stream):
        """Test the walk refuses unbounded bodies"""
        state = ChainState(current=np.ones(2))
        with pytest.raises(UnsupportedBodyError):
            bw_step(orthant(2), state, stream, SamplerConfig(tau=1.0, max_reflections=10, seed=1))


class TestHitAndRunStep:
    """Test one Hit-and-Run transition"""

    def test_patched_step(self, square, stream):
        """Test the chord pick and the two-call accounting"""
        state = ChainState(current=np.array([0.5, 0.5]))
        with patch("bwalk.services.samplers.uniform_interval", return_value=0.25), \
                patch.object(square, "random_direction", return_value=EAST):
            y = hr_step(square, state, stream)
        assert np.allclose(y, [0.75, 0.5])
        assert state.bo_calls == HR_BO_PER_SAMPLE
        assert state.oracle_calls == 1

    def test_unbounded_body(self, stream):
        """Test unbounded chords are refused"""
        with pytest.raises(UnsupportedBodyError):
            hr_step(orthant(2), ChainState(current=np.ones(2)), stream)


class TestRunChain:
    """Test budgeted chains and their reports"""

    def test_sample_budget(self, cube3):
        """Test the chain emits exactly the requested samples inside the body"""
        cfg = make_sampler_config(cube3, seed=3)
        report = run_chain(cube3, SamplerKind.BW, cfg, Budget(samples=50))
        assert report.n_samples == 50
        assert len(report.samples) == 50
        assert all(cube3.contains(np.array(x)) for x in report.samples)
        assert max(report.reflections) <= cfg.max_reflections
        assert sum(report.reflection_histogram.values()) == 50

    def test_bo_budget_overshoot(self, cube3):
        """Test the last sample may overshoot the BO budget"""
        cfg = make_sampler_config(cube3, seed=3)
        report = run_chain(cube3, SamplerKind.BW, cfg, Budget(bo_calls=200))
        assert report.bo_calls >= 200
        assert report.bo_overshoot == report.bo_calls - 200

    def test_hr_bo_budget(self, cube3):
        """Test Hit-and-Run spends exactly two calls per sample"""
        cfg = make_sampler_config(cube3, seed=3)
        report = run_chain(cube3, "hr", cfg, Budget(bo_calls=100))
        assert report.n_samples == 50
        assert report.bo_calls == 100
        assert report.bo_overshoot == 0

    def test_deterministic(self, square):
        """Test the same seed replays the same chain"""
        cfg = make_sampler_config(square, seed=99)
        first = run_chain(square, "bw", cfg, Budget(samples=20))
        second = run_chain(square, "bw", cfg, Budget(samples=20))
        assert first.samples == second.samples
        assert first.bo_calls == second.bo_calls

    def test_start_must_be_interior(self, square):
        """Test a boundary start is rejected"""
        cfg = make_sampler_config(square)
        with pytest.raises(PreconditionError):
            run_chain(square, "bw", cfg, Budget(samples=1), start=np.array([1.0, 0.5]))

    def test_curved_body(self):
        """Test a chain in a piecewise curved body stays inside"""
        body = TruncatedEllipse("nonconvex")
        cfg = make_sampler_config(body, seed=5)
        report = run_chain(body, "bw", cfg, Budget(samples=30))
        assert all(body.contains(np.array(x)) for x in report.samples)


class TestRunChains:
    """Test independent chains"""

    def test_chains_differ_and_keep_order(self, square):
        """Test sibling chains draw different samples in chain order"""
        cfg = make_sampler_config(square, seed=8)
        reports = run_chains(square, "bw", cfg, Budget(samples=10), chains=3, workers=1)
        assert [r.rng["chain_index"] for r in reports] == [0, 1, 2]
        assert reports[0].samples != reports[1].samples

    def test_workers_do_not_change_results(self, square):
        """Test thread fan-out reproduces the sequential run"""
        cfg = make_sampler_config(square, seed=8)
        sequential = run_chains(square, "hr", cfg, Budget(samples=10), chains=3, workers=1)
        threaded = run_chains(square, "hr", cfg, Budget(samples=10), chains=3, workers=3)
        assert [r.samples for r in sequential] == [r.samples for r in threaded]

    def test_chain_count(self, square):
        """Test at least one chain is required"""
        cfg = make_sampler_config(square)
        with pytest.raises(InvalidConfigError):
            run_chains(square, "bw", cfg, Budget(samples=1), chains=0)
