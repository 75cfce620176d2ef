"""
End-to-end pipeline checks on both tasks.

The full-size runs are marked slow; deselect them with -m "not slow".
"""

import numpy as np
import pytest

from dynoplan.commands.pipeline import goal_report_rows, run_episodes, setup_task
from dynoplan.commands.regions import regions_report
from dynoplan.commands.run import summary_rows
from dynoplan.data.models import GOAL_REACHED, TERMINAL
from dynoplan.models.schemas import ExperimentConfig, InterferenceConfig

CHAIN = ExperimentConfig(task="chain", episodes=200, seed=0)


def _assembly(episodes=100, interference=False):
    config = ExperimentConfig(task="assembly", episodes=episodes, seed=0)
    if not interference:
        disabled = InterferenceConfig(**{**config.assembly.interference.dict(), "enabled": False})
        config.assembly = config.assembly.copy(update={"interference": disabled})
    return config


def test_worker_count_does_not_change_results():
    config = CHAIN.copy(update={"episodes": 8, "planner": CHAIN.planner.copy(update={"rollouts": 16})})
    setup = setup_task(config)
    serial = run_episodes(config, setup, workers=1)
    parallel = run_episodes(config, setup, workers=4)
    assert [t.to_dict() for t in serial] == [t.to_dict() for t in parallel]


@pytest.mark.slow
def test_chain_planner_always_reaches_the_reward():
    traces = run_episodes(CHAIN, setup_task(CHAIN))
    assert len(traces) == 200
    assert all(trace.success for trace in traces)
    assert all(trace.task_completed for trace in traces)
    assert all(trace.status in (GOAL_REACHED, TERMINAL) for trace in traces)
    assert 2 <= np.median([trace.planning_steps for trace in traces]) <= 8


def _completion_rate(traces):
    return sum(trace.task_completed for trace in traces) / len(traces)


@pytest.mark.slow
def test_assembly_planner_without_interference():
    config = _assembly()
    traces = run_episodes(config, setup_task(config))
    assert _completion_rate(traces) >= 0.99


@pytest.mark.slow
def test_assembly_learned_models_on_held_out_demos():
    config = _assembly(episodes=1)
    setup = setup_task(config)
    assert len(setup.held_out) > 0

    rows = goal_report_rows(setup.goal, setup.held_out)
    assert np.mean([row[2] for row in rows]) >= 0.9

    report = regions_report(setup.regions, setup.held_out, config.regions.density_floor)
    assert report["option_ids"] == [1, 2, 3, 4]
    assert report["accuracy"] >= 0.9


@pytest.mark.slow
def test_assembly_planner_with_interference():
    config = _assembly(interference=True)
    traces = run_episodes(config, setup_task(config))
    assert _completion_rate(traces) >= 0.9

    rows = dict(summary_rows(config, traces))
    assert rows["human_present_steps"] > 0
    assert rows["cautious_share_human_present"] >= 0.95
    assert rows["task_completion_rate"] == _completion_rate(traces)
