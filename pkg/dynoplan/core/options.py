"""
Options and Rollouts

An option bundles a low-level policy, an initiation predicate, a
state-dependent termination rate and a one-step dynamics model used for
prediction. Rollouts simulate an option forward under its own model and
termination; execution runs it against the real environment.

Callable shapes:
    policy(state, rng) -> action
    initiation(state) -> bool
    termination_rate(states (R, d), context) -> rates (R,)
    dynamics(states (R, d), rng, context) -> next states (R, d)
"""

import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, List, Mapping, Optional, Protocol, Tuple

import numpy as np

from .errors import (
    DEFAULT_MAX_HORIZON,
    DimensionMismatchError,
    InitiationError,
    require_horizon,
    require_positive,
    require_same_dimension,
)
from ..data.models import RolloutResult, StateVector, Trajectory, TrajectoryStep

logger = logging.getLogger(__name__)

Policy = Callable[[StateVector, np.random.Generator], Any]
Initiation = Callable[[StateVector], bool]
TerminationRate = Callable[[np.ndarray, Mapping[str, float]], np.ndarray]
Dynamics = Callable[[np.ndarray, np.random.Generator, Mapping[str, float]], np.ndarray]

# Where an option's prediction model comes from
PLANNER_SURROGATE = "planner-surrogate"
LEARNED_SURROGATE = "learned-surrogate"
TABULAR = "tabular"
MIXED = "mixed"
OPTION_KINDS = (PLANNER_SURROGATE, LEARNED_SURROGATE, TABULAR, MIXED)


class Environment(Protocol):
    """Real system an option is executed against."""

    task_id: str

    @property
    def terminal(self) -> bool: ...

    def observe(self) -> StateVector: ...

    def step(self, action: Any) -> StateVector: ...


@dataclass(frozen=True)
class OptionSpec:
    id: int
    name: str
    state_kind: str
    dimension: int
    policy: Policy
    initiation: Initiation
    termination_rate: TerminationRate
    dynamics: Dynamics
    kind: str = PLANNER_SURROGATE

    def __post_init__(self):
        if self.kind not in OPTION_KINDS:
            raise ValueError(f"Unknown option kind: {self.kind}")

    def check_state(self, state: StateVector) -> None:
        if state.kind != self.state_kind:
            raise DimensionMismatchError(
                f"Option {self.id} expects {self.state_kind} states, got {state.kind}"
            )
        require_same_dimension(self.dimension, state.dimension, f"state for option {self.id}")

    def rates(self, states: np.ndarray, context: Mapping[str, float]) -> np.ndarray:
        return np.clip(np.asarray(self.termination_rate(states, context), dtype=float), 0.0, 1.0)

    def beta(self, state: StateVector) -> float:
        """Termination rate at a single state."""
        return float(self.rates(state.as_array()[None, :], state.context_dict())[0])

    def with_dynamics(self, dynamics: Dynamics, kind: Optional[str] = None) -> "OptionSpec":
        return replace(self, dynamics=dynamics, kind=kind or self.kind)


@dataclass
class BatchRollout:
    """R simultaneous rollouts of one option."""
    final_states: np.ndarray            # (R, d)
    terminated_at: np.ndarray           # (R,) step of termination, -1 when still active
    paths: Optional[List[np.ndarray]]   # horizon + 1 arrays of shape (R, d)
    active: Optional[List[np.ndarray]]  # horizon arrays of shape (R,)


def indicator_initiation(option: OptionSpec, state: StateVector) -> int:
    """1 when the option may start in state, else 0."""
    option.check_state(state)
    return 1 if option.initiation(state) else 0


def rollout_batch(
    option: OptionSpec,
    start: StateVector,
    horizon: int,
    count: int,
    rng: np.random.Generator,
    max_horizon: int = DEFAULT_MAX_HORIZON,
    keep_paths: bool = False,
) -> BatchRollout:
    """
    Simulate `count` rollouts of `option` from `start` for `horizon` steps.

    Each step applies the option's dynamics to every rollout, then draws one
    uniform per rollout and terminates those below the termination rate at
    their new state. Terminated rollouts keep their state until the horizon.
    Once every rollout has terminated no further draws are made.
    """
    require_horizon(horizon, max_horizon)
    require_positive(count, "rollout count")
    option.check_state(start)

    context = start.context_dict()
    states = np.tile(start.as_array(), (count, 1))
    active = np.ones(count, dtype=bool)
    terminated_at = np.full(count, -1, dtype=int)
    paths = [states.copy()] if keep_paths else None
    masks: Optional[List[np.ndarray]] = [] if keep_paths else None

    for t in range(horizon):
        if keep_paths:
            masks.append(active.copy())
        if not active.any():
            if keep_paths:
                paths.append(states.copy())
            continue
        proposed = np.asarray(option.dynamics(states, rng, context), dtype=float)
        if proposed.shape != states.shape:
            raise DimensionMismatchError(
                f"Dynamics of option {option.id} returned shape {proposed.shape}, expected {states.shape}"
            )
        states = np.where(active[:, None], proposed, states)
        stop = active & (rng.random(count) < option.rates(states, context))
        terminated_at[stop] = t + 1
        active &= ~stop
        if keep_paths:
            paths.append(states.copy())

    return BatchRollout(states, terminated_at, paths, masks)


def rollout(
    option: OptionSpec,
    start: StateVector,
    horizon: int,
    seed: int,
    max_horizon: int = DEFAULT_MAX_HORIZON,
) -> RolloutResult:
    """Single seeded rollout; identical inputs give an identical result."""
    rng = np.random.default_rng(seed)
    batch = rollout_batch(option, start, horizon, 1, rng, max_horizon, keep_paths=True)
    states = [StateVector.from_array(start.kind, path[0], start.context) for path in batch.paths]
    terminated = int(batch.terminated_at[0])
    return RolloutResult(
        states=states,
        terminated_at=terminated if terminated >= 0 else None,
        active_mask=[bool(mask[0]) for mask in batch.active],
    )


def execute_option(
    option: OptionSpec,
    env: Environment,
    seed: int,
    max_steps: int,
    trajectory_id: Optional[str] = None,
) -> Tuple[Trajectory, StateVector]:
    """
    Run option against the real environment until it terminates.

    The segment records the state reached after every environment step,
    starting at t=0. Only the last record carries the done flag, and only
    when the option terminated (or the environment became terminal) rather
    than hitting max_steps.

    Raises:
        InitiationError: when the current state is outside the initiation set
    """
    state = env.observe()
    if not indicator_initiation(option, state):
        raise InitiationError(option.id, f"Option {option.id} ({option.name}) cannot start in {state.values}")

    rng = np.random.default_rng(seed)
    steps: List[TrajectoryStep] = []
    for t in range(max_steps):
        action = option.policy(state, rng)
        state = env.step(action)
        stop = rng.random() < option.beta(state)
        done = stop or env.terminal
        steps.append(TrajectoryStep(t=t, state=state, option_id=option.id, done=done))
        if done:
            break
    else:
        logger.debug(f"Option {option.id} still active after {max_steps} steps")

    segment = Trajectory(env.task_id, trajectory_id or f"option-{option.id}", steps)
    return segment, state
