from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import math

import numpy as np

from ..core.errors import DemonstrationError, DimensionMismatchError, DynoPlanError

DISCRETE = "discrete"
CONTINUOUS = "continuous"


@dataclass(frozen=True)
class StateVector:
    """
    A task state: a discrete chain index or a fixed-dimension real vector.

    Context entries (e.g. human_proximity) ride along with the state but are
    not part of its dimension.
    """
    kind: str
    values: Tuple[float, ...]
    context: Tuple[Tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.kind not in (DISCRETE, CONTINUOUS):
            raise DynoPlanError(f"Unknown state kind: {self.kind}")
        if not self.values:
            raise DynoPlanError("State must have at least one entry")
        if any(not math.isfinite(v) for v in self.values):
            raise DynoPlanError(f"State entries must be finite: {self.values}")
        if self.kind == DISCRETE:
            if len(self.values) != 1:
                raise DynoPlanError("Discrete states hold exactly one index")
            index = self.values[0]
            if index < 0 or index != int(index):
                raise DynoPlanError(f"Discrete index must be a non-negative integer, got {index}")

    @classmethod
    def discrete(cls, index: int, context: Optional[Mapping[str, float]] = None) -> "StateVector":
        return cls(DISCRETE, (float(index),), _freeze_context(context))

    @classmethod
    def continuous(cls, values: Iterable[float], context: Optional[Mapping[str, float]] = None) -> "StateVector":
        return cls(CONTINUOUS, tuple(float(v) for v in values), _freeze_context(context))

    @classmethod
    def from_array(cls, kind: str, array: np.ndarray, context: Tuple[Tuple[str, float], ...] = ()) -> "StateVector":
        if kind == DISCRETE:
            return cls(DISCRETE, (float(round(float(array[0]))),), context)
        return cls(CONTINUOUS, tuple(float(v) for v in array), context)

    @property
    def dimension(self) -> int:
        return len(self.values)

    @property
    def index(self) -> int:
        if self.kind != DISCRETE:
            raise DynoPlanError("Continuous states have no index")
        return int(self.values[0])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def context_value(self, name: str, default: float = math.inf) -> float:
        for key, value in self.context:
            if key == name:
                return value
        return default

    def context_dict(self) -> Dict[str, float]:
        return dict(self.context)

    def require_compatible(self, other: "StateVector") -> None:
        if self.kind != other.kind or self.dimension != other.dimension:
            raise DimensionMismatchError(
                f"Cannot compare a {self.kind} state of dimension {self.dimension} "
                f"with a {other.kind} state of dimension {other.dimension}"
            )

    def to_json_value(self):
        """Integer for discrete states, list of numbers otherwise (trajectory line format)."""
        if self.kind == DISCRETE:
            return self.index
        return list(self.values)

    def to_dict(self) -> Dict:
        payload = {"kind": self.kind, "values": self.to_json_value()}
        if self.context:
            payload["context"] = self.context_dict()
        return payload

    @classmethod
    def from_dict(cls, payload: Mapping) -> "StateVector":
        context = payload.get("context")
        if payload["kind"] == DISCRETE:
            return cls.discrete(payload["values"], context)
        return cls.continuous(payload["values"], context)


def _freeze_context(context: Optional[Mapping[str, float]]) -> Tuple[Tuple[str, float], ...]:
    if not context:
        return ()
    return tuple(sorted((str(k), float(v)) for k, v in context.items()))


@dataclass(frozen=True)
class TrajectoryStep:
    t: int
    state: StateVector
    option_id: int
    done: bool = False


@dataclass
class Trajectory:
    task_id: str
    trajectory_id: str
    steps: List[TrajectoryStep] = field(default_factory=list)

    def __post_init__(self):
        for position, step in enumerate(self.steps):
            if step.t != position:
                raise DemonstrationError(
                    f"Trajectory {self.trajectory_id}: time index {step.t} at position {position}, "
                    f"expected indices increasing from 0"
                )
            if step.done and position != len(self.steps) - 1:
                raise DemonstrationError(
                    f"Trajectory {self.trajectory_id}: only the final step may carry the termination flag"
                )
        if self.steps:
            first = self.steps[0].state
            for step in self.steps[1:]:
                first.require_compatible(step.state)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def dimension(self) -> int:
        return self.steps[0].state.dimension if self.steps else 0

    @property
    def final_state(self) -> Optional[StateVector]:
        return self.steps[-1].state if self.steps else None

    def states_array(self) -> np.ndarray:
        return np.array([step.state.values for step in self.steps], dtype=float)

    def option_ids(self) -> List[int]:
        return [step.option_id for step in self.steps]

    def progress_labels(self) -> np.ndarray:
        """Normalized-time labels t/(T-1)."""
        if len(self.steps) < 2:
            raise DemonstrationError(f"Trajectory {self.trajectory_id} needs at least 2 steps for labels")
        return np.arange(len(self.steps), dtype=float) / (len(self.steps) - 1)

    def reversed(self) -> "Trajectory":
        ordered = list(reversed(self.steps))
        steps = [
            TrajectoryStep(t=i, state=s.state, option_id=s.option_id, done=(i == len(ordered) - 1))
            for i, s in enumerate(ordered)
        ]
        return Trajectory(self.task_id, f"{self.trajectory_id}-reversed", steps)


@dataclass
class DemonstrationSet:
    trajectories: List[Trajectory] = field(default_factory=list)
    regenerated: int = 0  # expert runs discarded while generating

    def __len__(self) -> int:
        return len(self.trajectories)

    @property
    def kind(self) -> str:
        return self.trajectories[0].steps[0].state.kind

    @property
    def dimension(self) -> int:
        return self.trajectories[0].dimension

    def states_array(self) -> np.ndarray:
        return np.vstack([traj.states_array() for traj in self.trajectories if traj.steps])

    def option_labels(self) -> np.ndarray:
        return np.array([oid for traj in self.trajectories for oid in traj.option_ids()], dtype=int)

    def transitions(self, option_id: int) -> Tuple[np.ndarray, np.ndarray]:
        """(states, next states) for every step where option_id was active."""
        current, following = [], []
        for traj in self.trajectories:
            for step, nxt in zip(traj.steps[:-1], traj.steps[1:]):
                if step.option_id == option_id:
                    current.append(step.state.values)
                    following.append(nxt.state.values)
        if not current:
            return np.empty((0, self.dimension)), np.empty((0, self.dimension))
        return np.array(current, dtype=float), np.array(following, dtype=float)

    def split(self, held_out: int) -> Tuple["DemonstrationSet", "DemonstrationSet"]:
        """Last `held_out` trajectories become the evaluation set."""
        if held_out <= 0:
            return self, DemonstrationSet([])
        return DemonstrationSet(self.trajectories[:-held_out]), DemonstrationSet(self.trajectories[-held_out:])


@dataclass
class RolloutResult:
    states: List[StateVector]
    terminated_at: Optional[int]
    active_mask: List[bool]

    @property
    def final_state(self) -> StateVector:
        return self.states[-1]

    @property
    def horizon(self) -> int:
        return len(self.states) - 1


@dataclass
class OptionScore:
    option_id: int
    expected_value: float
    predicted_end_state: StateVector
    predicted_mean: Tuple[float, ...]
    applicable: bool
    value_variance: float = 0.0  # empirical variance of per-rollout goal means
    goal_variance: float = 0.0   # mean heuristic variance at rollout end states

    def to_dict(self) -> Dict:
        return {
            "option_id": self.option_id,
            "expected_value": self.expected_value,
            "predicted_end_state": self.predicted_end_state.to_dict(),
            "predicted_mean": list(self.predicted_mean),
            "applicable": self.applicable,
            "value_variance": self.value_variance,
            "goal_variance": self.goal_variance,
        }


@dataclass
class PlanStep:
    step: int
    state: StateVector
    scores: List[OptionScore]
    chosen_id: Optional[int]
    no_progress: bool = False
    segment: Optional[Trajectory] = None
    realized_state: Optional[StateVector] = None
    realized_goal: Optional[float] = None
    realized_goal_variance: Optional[float] = None
    failure: Optional[str] = None

    @property
    def option_steps(self) -> int:
        return len(self.segment) if self.segment is not None else 0

    def to_dict(self) -> Dict:
        return {
            "step": self.step,
            "state": self.state.to_dict(),
            "scores": [score.to_dict() for score in self.scores],
            "chosen_id": self.chosen_id,
            "no_progress": self.no_progress,
            "option_steps": self.option_steps,
            "segment": [
                {"t": s.t, "state": s.state.to_json_value(), "option_id": s.option_id, "done": s.done}
                for s in (self.segment.steps if self.segment is not None else [])
            ],
            "realized_state": self.realized_state.to_dict() if self.realized_state else None,
            "realized_goal": self.realized_goal,
            "realized_goal_variance": self.realized_goal_variance,
            "failure": self.failure,
        }


# Plan statuses
GOAL_REACHED = "goal_reached"
TERMINAL = "terminal"
MAX_PLANNING_STEPS = "max_planning_steps"
NO_APPLICABLE_OPTION = "no_applicable_option"


@dataclass
class PlanTrace:
    task_id: str
    start_state: StateVector
    start_goal: float
    steps: List[PlanStep] = field(default_factory=list)
    status: str = MAX_PLANNING_STEPS
    episode: int = 0
    seed: int = 0
    task_completed: bool = False  # environment reported terminal

    @property
    def success(self) -> bool:
        return self.status in (GOAL_REACHED, TERMINAL)

    @property
    def executed_steps(self) -> List[PlanStep]:
        return [step for step in self.steps if step.failure is None and step.segment is not None]

    @property
    def planning_steps(self) -> int:
        return len(self.executed_steps)

    @property
    def final_state(self) -> StateVector:
        executed = self.executed_steps
        return executed[-1].realized_state if executed else self.start_state

    def chosen_ids(self) -> List[int]:
        return [step.chosen_id for step in self.executed_steps]

    def to_dict(self) -> Dict:
        return {
            "task_id": self.task_id,
            "episode": self.episode,
            "seed": self.seed,
            "status": self.status,
            "success": self.success,
            "task_completed": self.task_completed,
            "planning_steps": self.planning_steps,
            "start_state": self.start_state.to_dict(),
            "start_goal": self.start_goal,
            "final_state": self.final_state.to_dict(),
            "steps": [step.to_dict() for step in self.steps],
        }
