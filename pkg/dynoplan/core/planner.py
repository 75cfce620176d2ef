"""
Option Planner

Scores every option by Monte Carlo rollouts under its own dynamics model,
weighting the goal heuristic at the rollout end states by the initiation
indicator, then picks the best option and executes it. Repeats until the
goal heuristic clears the success threshold, the environment becomes
terminal, or the planning budget runs out.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .errors import DEFAULT_MAX_HORIZON, EmptyOptionSetError, InitiationError, require_positive
from .options import Environment, OptionSpec, execute_option, indicator_initiation, rollout_batch
from ..data.models import (
    DISCRETE,
    GOAL_REACHED,
    MAX_PLANNING_STEPS,
    NO_APPLICABLE_OPTION,
    TERMINAL,
    OptionScore,
    PlanStep,
    PlanTrace,
    StateVector,
)
from ..models.schemas import PlannerConfig
from ..utils.seeds import EXECUTE_STREAM, SCORE_STREAM, derive_seed

logger = logging.getLogger(__name__)


class GoalModel(Protocol):
    """Progress estimate in [0, 1] with an uncertainty."""

    def evaluate(self, state: StateVector) -> Tuple[float, float]: ...

    def evaluate_batch(
        self, states: np.ndarray, rng: Optional[np.random.Generator] = None
    ) -> Tuple[np.ndarray, np.ndarray]: ...


@dataclass
class Selection:
    chosen_id: Optional[int]
    scores: List[OptionScore] = field(default_factory=list)
    no_progress: bool = False


def _modal_state(final_states: np.ndarray) -> np.ndarray:
    values, counts = np.unique(np.rint(final_states[:, 0]), return_counts=True)
    # np.unique sorts, so argmax picks the lowest index among equally common ones
    return np.array([values[int(np.argmax(counts))]])


def score_option(
    option: OptionSpec,
    state: StateVector,
    goal: GoalModel,
    horizon: int,
    rollouts: int,
    seed: int,
    max_horizon: int = DEFAULT_MAX_HORIZON,
) -> OptionScore:
    """
    Expected goal value of running option from state for `horizon` steps.

    The value is the initiation indicator times the mean goal estimate over
    the rollout end states. Options that cannot start score 0 without any
    rollouts.
    """
    require_positive(rollouts, "rollout count")
    if not indicator_initiation(option, state):
        return OptionScore(
            option_id=option.id,
            expected_value=0.0,
            predicted_end_state=state,
            predicted_mean=tuple(state.values),
            applicable=False,
        )

    rng = np.random.default_rng(seed)
    batch = rollout_batch(option, state, horizon, rollouts, rng, max_horizon)
    means, variances = goal.evaluate_batch(batch.final_states, rng)
    means = np.asarray(means, dtype=float)

    predicted_mean = batch.final_states.mean(axis=0)
    end = _modal_state(batch.final_states) if state.kind == DISCRETE else predicted_mean
    return OptionScore(
        option_id=option.id,
        expected_value=float(means.mean()),
        predicted_end_state=StateVector.from_array(state.kind, end, state.context),
        predicted_mean=tuple(float(v) for v in predicted_mean),
        applicable=True,
        value_variance=float(means.var(ddof=1)) if rollouts > 1 else 0.0,
        goal_variance=float(np.mean(variances)),
    )


def select_option(
    state: StateVector,
    options: Sequence[OptionSpec],
    goal: GoalModel,
    config: PlannerConfig,
    step: int = 0,
) -> Selection:
    """
    Score every option and pick the argmax.

    Ties go to the lowest option id. When every score is zero the lowest-id
    applicable option is returned with no_progress set. When nothing is
    applicable chosen_id is None.

    Raises:
        EmptyOptionSetError: when options is empty
    """
    if not options:
        raise EmptyOptionSetError("No options to choose from")

    scores = [
        score_option(
            option,
            state,
            goal,
            config.horizon,
            config.rollouts,
            derive_seed(config.seed, SCORE_STREAM, step, option.id),
            config.max_horizon,
        )
        for option in sorted(options, key=lambda o: o.id)
    ]
    applicable = [s for s in scores if s.applicable]
    if not applicable:
        return Selection(None, scores, no_progress=True)

    no_progress = all(s.expected_value == 0.0 for s in scores)
    if no_progress:
        chosen = applicable[0]
    else:
        best = max(s.expected_value for s in applicable)
        chosen = next(s for s in applicable if s.expected_value == best)
    return Selection(chosen.option_id, scores, no_progress)


def _finish(trace: PlanTrace, env: Environment, status: str) -> PlanTrace:
    trace.status = status
    trace.task_completed = bool(env.terminal)
    return trace


def plan_execute(
    env: Environment,
    options: Iterable[OptionSpec],
    goal: GoalModel,
    config: PlannerConfig,
    episode: int = 0,
) -> PlanTrace:
    """
    Plan and execute options until the goal, a terminal state, or the budget.

    An option that turns out not to be initiable when executed is logged as
    a failed step and the selection is repeated without it.
    """
    options = sorted(options, key=lambda o: o.id)
    if not options:
        raise EmptyOptionSetError("No options to plan with")

    state = env.observe()
    start_goal, _ = goal.evaluate(state)
    trace = PlanTrace(env.task_id, state, float(start_goal), episode=episode, seed=config.seed)

    if start_goal >= config.goal_success_threshold:
        return _finish(trace, env, GOAL_REACHED)
    if env.terminal:
        return _finish(trace, env, TERMINAL)

    for step in range(config.max_planning_steps):
        candidates = list(options)
        while True:
            selection = select_option(state, candidates, goal, config, step)
            if selection.chosen_id is None:
                trace.steps.append(PlanStep(step, state, selection.scores, None, True,
                                            failure="no applicable option"))
                logger.info(f"Episode {episode}: no applicable option at step {step}")
                return _finish(trace, env, NO_APPLICABLE_OPTION)

            option = next(o for o in candidates if o.id == selection.chosen_id)
            try:
                segment, realized = execute_option(
                    option,
                    env,
                    derive_seed(config.seed, EXECUTE_STREAM, step),
                    config.max_option_steps,
                    trajectory_id=f"episode-{episode}-step-{step}",
                )
            except InitiationError as e:
                logger.warning(f"Episode {episode}, step {step}: {e}")
                trace.steps.append(PlanStep(step, state, selection.scores, option.id,
                                            selection.no_progress, failure=str(e)))
                candidates = [o for o in candidates if o.id != option.id]
                if not candidates:
                    return _finish(trace, env, NO_APPLICABLE_OPTION)
                continue
            break

        realized_goal, realized_variance = goal.evaluate(realized)
        trace.steps.append(PlanStep(
            step=step,
            state=state,
            scores=selection.scores,
            chosen_id=option.id,
            no_progress=selection.no_progress,
            segment=segment,
            realized_state=realized,
            realized_goal=float(realized_goal),
            realized_goal_variance=float(realized_variance),
        ))
        logger.debug(f"Episode {episode}, step {step}: option {option.id} ran {len(segment)} steps, "
                     f"goal {realized_goal:.3f}")
        state = realized

        if realized_goal >= config.goal_success_threshold:
            return _finish(trace, env, GOAL_REACHED)
        if env.terminal:
            return _finish(trace, env, TERMINAL)

    return _finish(trace, env, MAX_PLANNING_STEPS)
