"""
Goal heuristic tests: label construction, k-NN kernel regression and monotonicity.
"""

import numpy as np
import pytest
from conftest import line_trajectory

from dynoplan.core.errors import DemonstrationError, DimensionMismatchError
from dynoplan.data.models import DemonstrationSet, StateVector, Trajectory, TrajectoryStep
from dynoplan.learning.goal import GoalHeuristic, evaluate_goal, fit_goal_heuristic, monotonicity_score
from dynoplan.models.schemas import GoalFitConfig
from dynoplan.tasks.chain import chain_demonstrations


def _trajectory_1d(values, trajectory_id="t"):
    steps = [
        TrajectoryStep(t=t, state=StateVector.continuous([v]), option_id=1, done=(t == len(values) - 1))
        for t, v in enumerate(values)
    ]
    return Trajectory("test", trajectory_id, steps)


class TestFit:
    def test_final_state_maps_to_one_and_initial_to_zero(self, line_demos):
        heuristic = fit_goal_heuristic(line_demos)
        trajectory = line_demos.trajectories[0]
        assert evaluate_goal(heuristic, trajectory.steps[-1].state)[0] == pytest.approx(1.0)
        assert evaluate_goal(heuristic, trajectory.steps[0].state)[0] == pytest.approx(0.0)

    def test_chain_state_ten(self):
        heuristic = fit_goal_heuristic(chain_demonstrations(10))
        mean, variance = heuristic.evaluate(StateVector.discrete(10))
        assert mean == pytest.approx(9 / 19, abs=0.05)
        assert variance == pytest.approx(0.0)

    def test_exact_match_with_single_neighbor(self, line_demos):
        heuristic = fit_goal_heuristic(line_demos, GoalFitConfig(k=1))
        state = line_demos.trajectories[0].steps[4].state
        mean, variance = heuristic.evaluate(state)
        assert mean == pytest.approx(0.4)
        assert variance == 0.0

    def test_equidistant_neighbors_average(self):
        # labels 0, 0.2, 0.4, 0.6, 0.8, 1.0; query sits halfway between the 0.2 and 0.8 states
        trajectory = _trajectory_1d([-10.0, 0.0, -20.0, -30.0, 2.0, 40.0])
        heuristic = fit_goal_heuristic(DemonstrationSet([trajectory]), GoalFitConfig(k=2))
        mean, variance = heuristic.evaluate(StateVector.continuous([1.0]))
        assert mean == pytest.approx(0.5)
        assert variance == pytest.approx(0.09)

    def test_training_order_does_not_matter(self, rng):
        trajectories = [
            line_trajectory(rng.normal(size=3), rng.normal(size=3), 8, trajectory_id=f"demo-{i}")
            for i in range(5)
        ]
        forward = fit_goal_heuristic(DemonstrationSet(trajectories))
        shuffled = fit_goal_heuristic(DemonstrationSet(trajectories[::-1]))
        queries = rng.normal(size=(50, 3))
        np.testing.assert_array_equal(forward.evaluate_batch(queries)[0], shuffled.evaluate_batch(queries)[0])

    def test_outputs_in_unit_interval(self, line_demos, rng):
        heuristic = fit_goal_heuristic(line_demos)
        means, variances = heuristic.evaluate_batch(rng.normal(scale=100.0, size=(500, 2)))
        assert np.all((means >= 0.0) & (means <= 1.0))
        assert np.all(variances >= 0.0)

    def test_empty_set_rejected(self):
        with pytest.raises(DemonstrationError):
            fit_goal_heuristic(DemonstrationSet([]))

    def test_single_step_trajectory_rejected(self):
        with pytest.raises(DemonstrationError):
            fit_goal_heuristic(DemonstrationSet([_trajectory_1d([1.0])]))

    def test_dimension_mismatch(self, line_demos):
        heuristic = fit_goal_heuristic(line_demos)
        with pytest.raises(DimensionMismatchError):
            heuristic.evaluate(StateVector.continuous([1.0, 2.0, 3.0]))

    def test_saved_model_evaluates_identically(self, line_demos, rng):
        heuristic = fit_goal_heuristic(line_demos)
        restored = GoalHeuristic.from_dict(heuristic.to_dict())
        queries = rng.normal(size=(20, 2))
        np.testing.assert_array_equal(heuristic.evaluate_batch(queries)[0], restored.evaluate_batch(queries)[0])


class TestMonotonicity:
    def test_increasing_and_reversed(self, line_demos):
        heuristic = fit_goal_heuristic(line_demos)
        trajectory = line_demos.trajectories[0]
        assert monotonicity_score(heuristic, trajectory).score == pytest.approx(1.0)
        assert monotonicity_score(heuristic, trajectory.reversed()).score == pytest.approx(-1.0)

    def test_chain_demo_under_fitted_heuristic(self):
        demos = chain_demonstrations(10)
        heuristic = fit_goal_heuristic(demos)
        for trajectory in demos.trajectories:
            result = monotonicity_score(heuristic, trajectory)
            assert result.score >= 0.99
            assert not result.degenerate

    def test_constant_goal_values_are_degenerate(self):
        trajectory = _trajectory_1d([3.0, 3.0, 3.0])
        heuristic = fit_goal_heuristic(DemonstrationSet([trajectory]))
        result = monotonicity_score(heuristic, trajectory)
        assert result.degenerate
        assert result.score == 0.0

    def test_short_trajectory_rejected(self, line_demos):
        heuristic = fit_goal_heuristic(line_demos)
        with pytest.raises(DemonstrationError):
            monotonicity_score(heuristic, _trajectory_1d([0.0, 1.0]))
