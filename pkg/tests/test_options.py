"""
Option core tests: initiation, seeded rollouts and execution against a real environment.
"""

import numpy as np
import pytest

from dynoplan.core.errors import DimensionMismatchError, HorizonError, InitiationError, StateRangeError
from dynoplan.core.options import (
    PLANNER_SURROGATE,
    OptionSpec,
    execute_option,
    indicator_initiation,
    rollout,
    rollout_batch,
)
from dynoplan.data.models import CONTINUOUS, StateVector
from dynoplan.tasks.assembly import make_assembly_options
from dynoplan.tasks.chain import exact_end_distribution, make_chain_env, make_chain_options


def _noop_option(beta=1.0):
    return OptionSpec(
        id=1,
        name="noop",
        state_kind=CONTINUOUS,
        dimension=1,
        policy=lambda state, rng: 0.0,
        initiation=lambda state: True,
        termination_rate=lambda states, context: np.full(len(states), beta),
        dynamics=lambda states, rng, context: states.copy(),
        kind=PLANNER_SURROGATE,
    )


class NoopEnv:
    task_id = "noop"
    terminal = False

    def __init__(self):
        self.state = StateVector.continuous([0.5])

    def observe(self):
        return self.state

    def step(self, action):
        return self.state


class TestInitiation:
    def test_assembly_options_initiate_everywhere(self, rng):
        for option in make_assembly_options():
            for _ in range(20):
                state = StateVector.continuous(rng.uniform(-3, 3, 12))
                assert indicator_initiation(option, state) == 1

    def test_nothing_initiates_in_terminal_chain_state(self):
        for option in make_chain_options():
            assert indicator_initiation(option, StateVector.discrete(20)) == 0

    def test_out_of_range_chain_state_is_an_error(self):
        option = make_chain_options()[0]
        with pytest.raises(StateRangeError):
            indicator_initiation(option, StateVector.discrete(25))

    def test_continuous_state_rejected_by_chain_option(self):
        option = make_chain_options()[0]
        with pytest.raises(DimensionMismatchError):
            indicator_initiation(option, StateVector.continuous([1.0]))


class TestRollout:
    def test_zero_horizon_is_identity(self):
        option = make_chain_options()[0]
        start = StateVector.discrete(7)
        result = rollout(option, start, 0, seed=3)
        assert result.states == [start]
        assert result.terminated_at is None
        assert result.active_mask == []

    def test_right_mover_replays_seeded_draws(self):
        option = make_chain_options([0.2, 0.5, 0.9, 0.5, 0.5])[0]
        for seed in range(25):
            result = rollout(option, StateVector.discrete(1), 10, seed=seed)

            draws = np.random.default_rng(seed)
            expected_stop = None
            for t in range(1, 11):
                if draws.random(1)[0] < 0.2:
                    expected_stop = t
                    break
            moved = expected_stop if expected_stop is not None else 10

            indices = [s.index for s in result.states]
            assert len(indices) == 11
            assert indices == sorted(indices)
            assert result.terminated_at == expected_stop
            assert result.final_state.index == 1 + moved

    def test_states_frozen_after_termination(self):
        option = make_chain_options()[3]
        for seed in range(50):
            result = rollout(option, StateVector.discrete(10), 15, seed=seed)
            if result.terminated_at is None:
                continue
            frozen = result.states[result.terminated_at:]
            assert all(s == frozen[0] for s in frozen)

    def test_same_seed_same_rollout(self):
        option = make_chain_options()[3]
        first = rollout(option, StateVector.discrete(10), 12, seed=99)
        second = rollout(option, StateVector.discrete(10), 12, seed=99)
        assert first.states == second.states
        assert first.terminated_at == second.terminated_at

    def test_mean_final_state_matches_exact_distribution(self):
        option = make_chain_options()[0]
        batch = rollout_batch(option, StateVector.discrete(1), 10, 100_000, np.random.default_rng(0))
        distribution = exact_end_distribution(option, 1, 10)
        states = np.arange(len(distribution), dtype=float)
        exact_mean = float(np.sum(distribution * states))
        exact_std = float(np.sqrt(np.sum(distribution * (states - exact_mean) ** 2)))
        assert abs(batch.final_states[:, 0].mean() - exact_mean) < 4 * exact_std / np.sqrt(100_000)

    def test_horizon_limits(self):
        option = make_chain_options()[0]
        with pytest.raises(HorizonError):
            rollout(option, StateVector.discrete(1), -1, seed=0)
        with pytest.raises(HorizonError):
            rollout(option, StateVector.discrete(1), 50, seed=0, max_horizon=20)


class TestExecuteOption:
    def test_immediate_termination_in_noop_env(self):
        env = NoopEnv()
        segment, state = execute_option(_noop_option(beta=1.0), env, seed=0, max_steps=10)
        assert len(segment) == 1
        assert state == env.state
        assert segment.steps[0].done

    def test_segment_length_is_first_success_of_seeded_draws(self):
        option = make_chain_options()[1]
        for seed in range(25):
            segment, _ = execute_option(option, make_chain_env(1), seed=seed, max_steps=100)
            draws = np.random.default_rng(seed)
            expected = next(t for t in range(1, 100) if draws.random() < 0.5)
            assert len(segment) == expected
            assert segment.steps[-1].done
            assert [s.t for s in segment.steps] == list(range(expected))

    def test_left_mover_decreases_state(self):
        option = make_chain_options()[4]
        for seed in range(10):
            _, state = execute_option(option, make_chain_env(3), seed=seed, max_steps=100)
            assert state.index < 3

    def test_initiation_failure_raises(self):
        with pytest.raises(InitiationError) as excinfo:
            execute_option(make_chain_options()[0], make_chain_env(20), seed=0, max_steps=10)
        assert excinfo.value.option_id == 1

    def test_step_cap_leaves_done_unset(self):
        segment, _ = execute_option(_noop_option(beta=0.0), NoopEnv(), seed=0, max_steps=5)
        assert len(segment) == 5
        assert not any(step.done for step in segment.steps)
