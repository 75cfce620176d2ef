"""
Run Command - plan and execute seeded episodes.

Usage:
- dynoplan run --config configs/chain.json [--seed N] [--out DIR] [--episodes N]

Artifacts (under the output directory):
- config.json            effective configuration
- plan_traces.jsonl      one PlanTrace per episode
- summary.csv            success rate, planning-step statistics, option usage
- chosen_options.csv     chosen option per executed planning step
- predicted_states.csv   per-option predicted end states at every planning step
Assembly runs add demos.jsonl, goal_model.json, goal_tracking.csv,
goal_report.csv, regions.json and the regions report.
"""

import logging
from typing import List, Sequence

import numpy as np

from ..data.models import NO_APPLICABLE_OPTION, PlanTrace
from ..db.artifacts import ArtifactStore
from ..models.schemas import ExperimentConfig
from ..tasks.assembly import CAUTIOUS
from ..utils.formatters import format_vector
from .config import apply_overrides, load_config
from .pipeline import (
    goal_report_rows,
    goal_tracking_rows,
    human_present,
    option_frequencies,
    run_episodes,
    setup_task,
)
from .regions import write_regions_report

logger = logging.getLogger(__name__)

SUMMARY_HEADER = ["metric", "value"]
CHOSEN_HEADER = ["episode", "step", "chosen_id", "option_steps", "realized_goal", "no_progress", "human_present"]
PREDICTED_HEADER = ["episode", "step", "option_id", "applicable", "expected_value",
                    "predicted_end_state", "predicted_mean", "chosen"]
TRACKING_HEADER = ["trajectory_id", "t", "label", "mean", "variance"]
GOAL_REPORT_HEADER = ["trajectory_id", "steps", "monotonicity", "degenerate", "mean_abs_deviation"]


def register(subparsers, parents: Sequence = ()):
    parser = subparsers.add_parser("run", parents=list(parents), help="Plan and execute seeded episodes")
    parser.set_defaults(handler=cmd_run, config_required=True)
    return parser


def summary_rows(config: ExperimentConfig, traces: List[PlanTrace]) -> List[list]:
    planning_steps = [trace.planning_steps for trace in traces]
    successful = [trace.planning_steps for trace in traces if trace.success]
    option_steps = [step.option_steps for trace in traces for step in trace.executed_steps]
    rows = [
        ["task", config.task],
        ["episodes", len(traces)],
        ["seed", config.seed],
        ["success_rate", sum(trace.success for trace in traces) / len(traces)],
        ["task_completion_rate", sum(trace.task_completed for trace in traces) / len(traces)],
        ["median_planning_steps", float(np.median(planning_steps))],
        ["mean_planning_steps", float(np.mean(planning_steps))],
        ["median_planning_steps_successful", float(np.median(successful)) if successful else float("nan")],
        ["median_option_steps", float(np.median(option_steps)) if option_steps else float("nan")],
        ["no_applicable_option_episodes", sum(trace.status == NO_APPLICABLE_OPTION for trace in traces)],
    ]
    for status in sorted({trace.status for trace in traces}):
        rows.append([f"status_{status}", sum(trace.status == status for trace in traces)])
    for option_id, count in option_frequencies(traces).items():
        rows.append([f"chosen_option_{option_id}", count])

    if config.task == "assembly":
        absent = config.assembly.interference.absent_proximity
        present = [step for trace in traces for step in trace.executed_steps if human_present(step.state, absent)]
        rows.extend([
            ["human_present_steps", len(present)],
            ["cautious_share_human_present",
             sum(step.chosen_id == CAUTIOUS for step in present) / len(present) if present else float("nan")],
        ])
    return rows


def chosen_rows(config: ExperimentConfig, traces: List[PlanTrace]) -> List[list]:
    absent = config.assembly.interference.absent_proximity
    rows = []
    for trace in traces:
        for step in trace.executed_steps:
            rows.append([trace.episode, step.step, step.chosen_id, step.option_steps, step.realized_goal,
                         int(step.no_progress), int(human_present(step.state, absent))])
    return rows


def predicted_rows(traces: List[PlanTrace]) -> List[list]:
    rows = []
    for trace in traces:
        for step in trace.steps:
            for score in step.scores:
                rows.append([
                    trace.episode,
                    step.step,
                    score.option_id,
                    int(score.applicable),
                    score.expected_value,
                    format_vector(score.predicted_end_state.values),
                    format_vector(score.predicted_mean),
                    int(score.option_id == step.chosen_id),
                ])
    return rows


def execute(config: ExperimentConfig, store: ArtifactStore) -> List[PlanTrace]:
    """Full pipeline; artifacts are written as each stage completes."""
    store.write_json("config.json", config.dict())

    setup = setup_task(config)
    if setup.demos is not None:
        store.save_demonstrations("demos.jsonl", setup.demos)
    if config.task == "assembly" or config.chain.goal_mode == "fitted":
        store.save_goal("goal_model.json", setup.goal)
    if setup.held_out is not None and len(setup.held_out):
        store.write_csv("goal_tracking.csv", TRACKING_HEADER, goal_tracking_rows(setup.goal, setup.held_out))
        store.write_csv("goal_report.csv", GOAL_REPORT_HEADER, goal_report_rows(setup.goal, setup.held_out))
    if setup.regions is not None:
        store.save_regions("regions.json", setup.regions)
        if setup.held_out is not None and len(setup.held_out):
            write_regions_report(store, setup.regions, setup.held_out, config.regions.density_floor)

    traces = run_episodes(config, setup)
    store.write_jsonl("plan_traces.jsonl", (trace.to_dict() for trace in traces))
    store.write_csv("summary.csv", SUMMARY_HEADER, summary_rows(config, traces))
    store.write_csv("chosen_options.csv", CHOSEN_HEADER, chosen_rows(config, traces))
    store.write_csv("predicted_states.csv", PREDICTED_HEADER, predicted_rows(traces))
    return traces


def cmd_run(args) -> int:
    config = apply_overrides(load_config(args.config), args.seed, args.out, args.episodes)
    store = ArtifactStore(config.output_dir)
    traces = execute(config, store)
    completed = sum(trace.task_completed for trace in traces) / len(traces)
    logger.info(f"Wrote {len(store.written)} artifacts to {store.root} (task completion {completed:.3f})")
    return 0
