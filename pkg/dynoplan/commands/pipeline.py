"""
Experiment Pipeline

Task setup shared by the commands: demonstrations, fitted models, the
options used for planning, and the episode fan-out.
"""

import asyncio
import logging
import os
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..core.options import Environment, OptionSpec
from ..core.planner import GoalModel, plan_execute
from ..data.models import DemonstrationSet, PlanTrace
from ..learning.goal import GoalHeuristic, fit_goal_heuristic, monotonicity_score
from ..learning.regions import GaussianMixtureRegions, fit_regions
from ..models.schemas import ExperimentConfig, InterferenceConfig
from ..tasks.assembly import (
    HUMAN_PROXIMITY,
    assembly_env_factory,
    generate_demonstrations,
    make_assembly_env,
    make_assembly_options,
    with_learned_dynamics,
)
from ..tasks.chain import chain_demonstrations, make_chain_env, make_chain_options, make_noisy_models
from ..utils.seeds import DEMO_STREAM, EPISODE_STREAM, derive_seed

logger = logging.getLogger(__name__)

DEFAULT_WORKERS = 4


@dataclass
class TaskSetup:
    options: List[OptionSpec]
    goal: GoalModel
    make_env: Callable[[int], Environment]
    demos: Optional[DemonstrationSet] = None
    train: Optional[DemonstrationSet] = None
    held_out: Optional[DemonstrationSet] = None
    regions: Optional[GaussianMixtureRegions] = None


def episode_seed(config: ExperimentConfig, episode: int) -> int:
    return derive_seed(config.seed, EPISODE_STREAM, episode)


def worker_count() -> int:
    try:
        return max(1, int(os.getenv("DYNOPLAN_WORKERS", DEFAULT_WORKERS)))
    except ValueError:
        logger.warning("DYNOPLAN_WORKERS is not an integer; using the default")
        return DEFAULT_WORKERS


# ============================================
# Demonstrations
# ============================================

def _concat(*sets: DemonstrationSet) -> DemonstrationSet:
    return DemonstrationSet(
        [trajectory for demo_set in sets for trajectory in demo_set.trajectories],
        sum(demo_set.regenerated for demo_set in sets),
    )


def assembly_demonstrations(config: ExperimentConfig):
    """
    Clean expert runs plus runs where a human always arrives once the
    carried gear is a fixed distance from the pre-assembly pose.

    Returns:
        (clean, interfered) demonstration sets
    """
    assembly = config.assembly
    options = make_assembly_options(assembly)
    clean = generate_demonstrations(
        assembly_env_factory(assembly), options, assembly.demo_count, False,
        derive_seed(config.seed, DEMO_STREAM, "clean"), assembly.expert_max_steps, "clean",
    )
    if assembly.interference_demo_count == 0:
        return clean, DemonstrationSet([])

    forced = InterferenceConfig(**{
        **assembly.interference.dict(),
        "enabled": True,
        "arrival_probability": 0.0,
        "forced_arrival_distance": assembly.forced_demo_arrival_distance,
    })
    interfered = generate_demonstrations(
        assembly_env_factory(assembly.copy(update={"interference": forced})), options,
        assembly.interference_demo_count, True,
        derive_seed(config.seed, DEMO_STREAM, "interference"), assembly.expert_max_steps, "interference",
    )
    return clean, interfered


def task_demonstrations(config: ExperimentConfig) -> DemonstrationSet:
    if config.task == "chain":
        return chain_demonstrations(config.chain.demo_count, config.chain.start_state)
    return _concat(*assembly_demonstrations(config))


# ============================================
# Task setup
# ============================================

def setup_chain(config: ExperimentConfig) -> TaskSetup:
    chain = config.chain
    options, noisy_goal = make_noisy_models(make_chain_options(chain.beta_assignment), chain.noise)
    demos = None
    goal: GoalModel = noisy_goal
    if chain.goal_mode == "fitted":
        demos = chain_demonstrations(chain.demo_count, chain.start_state)
        goal = fit_goal_heuristic(demos, config.goal_fit)
    return TaskSetup(options, goal, lambda seed: make_chain_env(chain.start_state), demos=demos, train=demos)


def setup_assembly(config: ExperimentConfig) -> TaskSetup:
    assembly = config.assembly
    clean, interfered = assembly_demonstrations(config)
    clean_train, clean_held = clean.split(assembly.held_out_count)
    interfered_train, interfered_held = interfered.split(min(assembly.held_out_count, len(interfered) - 1))
    train = _concat(clean_train, interfered_train)
    held_out = _concat(clean_held, interfered_held)

    goal = fit_goal_heuristic(train, config.goal_fit)
    regions = fit_regions(train.states_array(), train.option_labels(), config.em)

    options = make_assembly_options(assembly)
    if assembly.dynamics == "fitted":
        options = with_learned_dynamics(options, train, assembly.dynamics_fit)

    return TaskSetup(
        options=options,
        goal=goal,
        make_env=lambda seed: make_assembly_env(assembly, seed),
        demos=_concat(clean, interfered),
        train=train,
        held_out=held_out,
        regions=regions,
    )


def setup_task(config: ExperimentConfig) -> TaskSetup:
    return setup_chain(config) if config.task == "chain" else setup_assembly(config)


# ============================================
# Episodes
# ============================================

def run_episode(config: ExperimentConfig, setup: TaskSetup, episode: int) -> PlanTrace:
    seed = episode_seed(config, episode)
    planner = config.planner.copy(update={"seed": seed})
    return plan_execute(setup.make_env(seed), setup.options, setup.goal, planner, episode)


async def _run_all(config: ExperimentConfig, setup: TaskSetup, workers: int) -> List[PlanTrace]:
    limit = asyncio.Semaphore(workers)

    async def one(episode: int) -> PlanTrace:
        async with limit:
            return await asyncio.to_thread(run_episode, config, setup, episode)

    # gather keeps episode order regardless of completion order
    return list(await asyncio.gather(*(one(e) for e in range(config.episodes))))


def run_episodes(config: ExperimentConfig, setup: TaskSetup, workers: Optional[int] = None) -> List[PlanTrace]:
    workers = workers or worker_count()
    if workers == 1:
        traces = [run_episode(config, setup, e) for e in range(config.episodes)]
    else:
        traces = asyncio.run(_run_all(config, setup, workers))
    successes = sum(trace.success for trace in traces)
    completed = sum(trace.task_completed for trace in traces)
    logger.info(f"Ran {len(traces)} {config.task} episodes: {successes} successful, {completed} completed the task")
    return traces


# ============================================
# Derived tables
# ============================================

def human_present(state, absent_proximity: float) -> bool:
    return state.context_value(HUMAN_PROXIMITY, absent_proximity) < absent_proximity


def goal_tracking_rows(goal: GoalHeuristic, demos: DemonstrationSet) -> List[list]:
    """trajectory_id, t, label, mean, variance for every step of every trajectory."""
    rows = []
    for trajectory in demos.trajectories:
        means, variances = goal.evaluate_batch(trajectory.states_array())
        for t, (label, mean, variance) in enumerate(zip(trajectory.progress_labels(), means, variances)):
            rows.append([trajectory.trajectory_id, t, float(label), float(mean), float(variance)])
    return rows


def goal_report_rows(goal: GoalHeuristic, demos: DemonstrationSet) -> List[list]:
    """trajectory_id, steps, monotonicity, degenerate, mean absolute label deviation."""
    rows = []
    for trajectory in demos.trajectories:
        result = monotonicity_score(goal, trajectory)
        means, _ = goal.evaluate_batch(trajectory.states_array())
        deviation = float(np.mean(np.abs(means - trajectory.progress_labels())))
        rows.append([trajectory.trajectory_id, len(trajectory), result.score, int(result.degenerate), deviation])
    return rows


def option_frequencies(traces: Sequence[PlanTrace]) -> dict:
    counts: dict = {}
    for trace in traces:
        for option_id in trace.chosen_ids():
            counts[option_id] = counts.get(option_id, 0) + 1
    return dict(sorted(counts.items()))
