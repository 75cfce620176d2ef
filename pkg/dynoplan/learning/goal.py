"""
Goal Heuristic

Nearness-to-goal estimate learned from demonstrations. Every demo state at
time t of a T-step trajectory is labeled t/(T-1); a query is answered by
Gaussian-kernel weighted k-nearest-neighbor regression over those labels in
per-dimension standardized coordinates.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, NamedTuple, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist
from scipy.stats import spearmanr

from ..core.errors import DemonstrationError, DimensionMismatchError
from ..data.models import DemonstrationSet, StateVector, Trajectory
from ..models.schemas import GoalFitConfig

logger = logging.getLogger(__name__)

# Median pairwise distance is computed on at most this many states
BANDWIDTH_SAMPLE = 2000
MIN_SCALE = 1e-12


class MonotonicityResult(NamedTuple):
    score: float
    degenerate: bool


@dataclass(eq=False)
class GoalHeuristic:
    task_id: str
    kind: str
    training_states: np.ndarray   # (N, d)
    labels: np.ndarray            # (N,)
    k: int
    bandwidth: float
    center: np.ndarray            # (d,)
    scale: np.ndarray             # (d,)
    _tree: cKDTree = field(init=False, repr=False)

    def __post_init__(self):
        self.training_states = np.asarray(self.training_states, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        self.center = np.asarray(self.center, dtype=float)
        self.scale = np.asarray(self.scale, dtype=float)
        self._tree = cKDTree(self._standardize(self.training_states))

    @property
    def dimension(self) -> int:
        return self.training_states.shape[1]

    def _standardize(self, states: np.ndarray) -> np.ndarray:
        return (states - self.center) / self.scale

    def evaluate_batch(
        self, states: np.ndarray, rng: Optional[np.random.Generator] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        """(means, variances) for an (R, d) array of states. rng is unused; evaluation is pure."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if states.shape[1] != self.dimension:
            raise DimensionMismatchError(
                f"Goal heuristic for {self.task_id} expects dimension {self.dimension}, got {states.shape[1]}"
            )

        k = min(self.k, len(self.labels))
        distances, indices = self._tree.query(self._standardize(states), k=k)
        distances = distances.reshape(len(states), k)
        indices = indices.reshape(len(states), k)
        neighbor_labels = self.labels[indices]

        exact = distances == 0.0
        closest = distances.min(axis=1, keepdims=True)
        # Shifting by the closest distance keeps far queries from underflowing to 0/0
        with np.errstate(over="ignore", invalid="ignore"):
            weights = np.exp(-(distances ** 2 - closest ** 2) / (2.0 * self.bandwidth ** 2))
        has_exact = exact.any(axis=1)
        weights[has_exact] = exact[has_exact].astype(float)
        # Overflowing squares on extreme queries: fall back to the nearest neighbors alone
        overflow = ~np.isfinite(weights).all(axis=1)
        weights[overflow] = (distances[overflow] == closest[overflow]).astype(float)

        total = weights.sum(axis=1)
        means = (weights * neighbor_labels).sum(axis=1) / total
        variances = (weights * (neighbor_labels - means[:, None]) ** 2).sum(axis=1) / total
        return np.clip(means, 0.0, 1.0), np.maximum(variances, 0.0)

    def evaluate(self, state: StateVector) -> Tuple[float, float]:
        if state.kind != self.kind:
            raise DimensionMismatchError(f"Goal heuristic expects {self.kind} states, got {state.kind}")
        means, variances = self.evaluate_batch(state.as_array()[None, :])
        return float(means[0]), float(variances[0])

    def to_dict(self) -> Dict:
        return {
            "task_id": self.task_id,
            "kind": self.kind,
            "k": self.k,
            "bandwidth": self.bandwidth,
            "center": self.center.tolist(),
            "scale": self.scale.tolist(),
            "training_states": self.training_states.tolist(),
            "labels": self.labels.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> "GoalHeuristic":
        return cls(
            task_id=payload["task_id"],
            kind=payload["kind"],
            training_states=np.array(payload["training_states"], dtype=float),
            labels=np.array(payload["labels"], dtype=float),
            k=int(payload["k"]),
            bandwidth=float(payload["bandwidth"]),
            center=np.array(payload["center"], dtype=float),
            scale=np.array(payload["scale"], dtype=float),
        )


def _median_pairwise_distance(points: np.ndarray) -> float:
    if len(points) > BANDWIDTH_SAMPLE:
        points = points[np.linspace(0, len(points) - 1, BANDWIDTH_SAMPLE).astype(int)]
    if len(points) < 2:
        return 1.0
    median = float(np.median(pdist(points)))
    return median if median > 0 else 1.0


def fit_goal_heuristic(demos: DemonstrationSet, config: Optional[GoalFitConfig] = None,
                       task_id: Optional[str] = None) -> GoalHeuristic:
    """
    Fit a goal heuristic from demonstration trajectories.

    Training data is sorted into a canonical order first, so the result does
    not depend on the order trajectories appear in.

    Raises:
        DemonstrationError: empty demo set or a trajectory shorter than 2 steps
    """
    config = config or GoalFitConfig()
    if len(demos) == 0:
        raise DemonstrationError("Cannot fit a goal heuristic from an empty demonstration set")
    for trajectory in demos.trajectories:
        if len(trajectory) < 2:
            raise DemonstrationError(
                f"Trajectory {trajectory.trajectory_id} has {len(trajectory)} steps; at least 2 are needed"
            )

    states = demos.states_array()
    labels = np.concatenate([trajectory.progress_labels() for trajectory in demos.trajectories])
    order = np.lexsort(np.column_stack([states, labels]).T[::-1])
    states, labels = states[order], labels[order]

    center = states.mean(axis=0)
    scale = states.std(axis=0)
    scale = np.where(scale < MIN_SCALE, 1.0, scale)
    bandwidth = config.bandwidth or _median_pairwise_distance((states - center) / scale)

    heuristic = GoalHeuristic(
        task_id=task_id or demos.trajectories[0].task_id,
        kind=demos.kind,
        training_states=states,
        labels=labels,
        k=config.k,
        bandwidth=bandwidth,
        center=center,
        scale=scale,
    )
    logger.info(f"Fitted goal heuristic on {len(labels)} states from {len(demos)} trajectories "
                f"(k={config.k}, bandwidth={bandwidth:.4f})")
    return heuristic


def evaluate_goal(heuristic: GoalHeuristic, state: StateVector) -> Tuple[float, float]:
    return heuristic.evaluate(state)


def monotonicity_score(heuristic, trajectory: Trajectory) -> MonotonicityResult:
    """
    Spearman rank correlation between step index and goal mean along trajectory.

    Constant goal values give (0.0, degenerate=True).
    """
    if len(trajectory) < 3:
        raise DemonstrationError(f"Trajectory {trajectory.trajectory_id} needs at least 3 steps")
    means, _ = heuristic.evaluate_batch(trajectory.states_array())
    if np.ptp(means) == 0:
        return MonotonicityResult(0.0, True)
    correlation = spearmanr(np.arange(len(means)), means)[0]
    return MonotonicityResult(float(correlation), False)
