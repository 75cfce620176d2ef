"""
Assembly Surrogate

Two 6-joint arms in a shared 12-dimensional joint space. The left arm picks
a gear and carries it to a peg held by the right arm. Four options:

    1 grasp       both arms interpolate to the grasp / presentation pose
    2 quick       left arm takes large steps toward the pre-assembly pose
    3 cautious    left arm swings out on a contracting arc toward the same pose
    4 insert      left arm descends to the insertion pose with jitter

A human may wander close to the robot. Their proximity only registers while
the gear is carried through the transport corridor, that is outside the
handover funnel around the pre-assembly pose. Options 1 and 2 terminate
almost immediately while a human is near; option 3 keeps going. Options 2-4
end at once when no gear is held, and insertion only makes progress inside
the handover funnel. Human proximity and the gear flag are carried as state
context and held fixed over a rollout.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.special import expit

from ..core.errors import ConfigError, DynoPlanError, ExpertFailure, require_same_dimension
from ..core.options import (
    LEARNED_SURROGATE,
    MIXED,
    PLANNER_SURROGATE,
    OptionSpec,
    execute_option,
)
from ..data.models import CONTINUOUS, DemonstrationSet, StateVector, Trajectory, TrajectoryStep
from ..learning.dynamics import learn_option_dynamics
from ..models.schemas import ASSEMBLY_DIMENSION, JOINTS_PER_ARM, AssemblyTaskConfig, DynamicsFitConfig
from ..utils.seeds import DEMO_STREAM, derive_seed

logger = logging.getLogger(__name__)

TASK_ID = "assembly"
JOINT_LIMIT = np.pi
HUMAN_PROXIMITY = "human_proximity"
GEAR_HELD = "gear_held"

GRASP, QUICK, CAUTIOUS, INSERT = 1, 2, 3, 4

LEFT = slice(0, JOINTS_PER_ARM)


def _near(distance: np.ndarray, threshold: float, width: float) -> np.ndarray:
    """Rises from 0 to 1 as distance falls below threshold."""
    return expit((threshold - distance) / width)


def _unit(vector: np.ndarray, name: str) -> np.ndarray:
    norm = np.linalg.norm(vector)
    if norm < 1e-9:
        raise ConfigError(f"{name} is degenerate", key=name)
    return vector / norm


def cautious_arc(grasp_left: np.ndarray, pre_left: np.ndarray, via_left: np.ndarray,
                 fraction: float, turn: float) -> np.ndarray:
    """
    Linear map taking the left-arm offset from the pre-assembly pose one
    cautious step forward.

    The offset shrinks by `fraction` and turns by `turn` radians in the plane
    spanned by the grasp approach and the via side, away from the approach
    and toward the via pose.
    """
    approach = _unit(grasp_left - pre_left, "grasp_left")
    side = via_left - pre_left
    side = _unit(side - (side @ approach) * approach, "via_left")
    rotation = (
        np.eye(JOINTS_PER_ARM)
        + (np.cos(turn) - 1.0) * (np.outer(approach, approach) + np.outer(side, side))
        + np.sin(turn) * (np.outer(side, approach) - np.outer(approach, side))
    )
    return (1.0 - fraction) * rotation


@dataclass(frozen=True, eq=False)
class AssemblyGeometry:
    """Waypoints and option parameters derived from the task config."""
    start: np.ndarray
    grasp: np.ndarray          # both arms
    pre_left: np.ndarray
    insertion_left: np.ndarray
    fractions: tuple
    arc: np.ndarray            # (6, 6)
    handover_radius: float
    width: float

    @classmethod
    def from_config(cls, config: AssemblyTaskConfig) -> "AssemblyGeometry":
        grasp_left = np.array(config.grasp_left, dtype=float)
        pre_left = np.array(config.pre_assembly_left, dtype=float)
        return cls(
            start=np.array(config.start_pose, dtype=float),
            grasp=np.array(config.grasp_left + config.present_right, dtype=float),
            pre_left=pre_left,
            insertion_left=np.array(config.insertion_left, dtype=float),
            fractions=tuple(config.step_fractions),
            arc=cautious_arc(grasp_left, pre_left, np.array(config.via_left, dtype=float),
                             config.step_fractions[2], config.cautious_turn),
            handover_radius=config.handover_radius,
            width=config.threshold_width,
        )

    def grasp_delta(self, states: np.ndarray) -> np.ndarray:
        return self.fractions[0] * (self.grasp - states)

    def quick_delta(self, states: np.ndarray) -> np.ndarray:
        delta = np.zeros_like(states)
        delta[:, LEFT] = self.fractions[1] * (self.pre_left - states[:, LEFT])
        return delta

    def cautious_delta(self, states: np.ndarray) -> np.ndarray:
        delta = np.zeros_like(states)
        offset = states[:, LEFT] - self.pre_left
        delta[:, LEFT] = offset @ self.arc.T - offset
        return delta

    def in_handover(self, states: np.ndarray) -> np.ndarray:
        """Soft membership of the handover funnel, in [0, 1]."""
        return _near(self.left_distance(states, self.pre_left), self.handover_radius, self.width)

    def insert_delta(self, states: np.ndarray) -> np.ndarray:
        delta = np.zeros_like(states)
        pull = self.fractions[3] * self.in_handover(states)[:, None]
        delta[:, LEFT] = pull * (self.insertion_left - states[:, LEFT])
        return delta

    def left_distance(self, states: np.ndarray, target: np.ndarray) -> np.ndarray:
        return np.linalg.norm(states[:, LEFT] - target, axis=1)


def clip_joints(joints: np.ndarray) -> np.ndarray:
    return np.clip(joints, -JOINT_LIMIT, JOINT_LIMIT)


class AssemblyEnv:
    """Mutable single-episode simulation handle."""

    task_id = TASK_ID

    def __init__(self, config: AssemblyTaskConfig, seed: int, interference: Optional[bool] = None):
        self.config = config
        self.geometry = AssemblyGeometry.from_config(config)
        self.interference_enabled = config.interference.enabled if interference is None else interference
        self._rng = np.random.default_rng(seed)
        offset = self._rng.uniform(-config.start_box_halfwidth, config.start_box_halfwidth, ASSEMBLY_DIMENSION)
        self.joints = clip_joints(self.geometry.start + offset)
        self.gear_grasped = False
        self.gear_inserted = False
        self.human_present = False
        self.step_count = 0
        self.grasp_step: Optional[int] = None
        self._forced_arrival_done = False

    @property
    def in_corridor(self) -> bool:
        """Gear carried outside the handover funnel."""
        if not self.gear_grasped or self.gear_inserted:
            return False
        return np.linalg.norm(self.joints[LEFT] - self.geometry.pre_left) > self.config.handover_radius

    @property
    def human_near(self) -> bool:
        return self.human_present and self.in_corridor

    @property
    def human_proximity(self) -> float:
        interference = self.config.interference
        return interference.present_proximity if self.human_near else interference.absent_proximity

    @property
    def terminal(self) -> bool:
        return self.gear_inserted

    def observe(self) -> StateVector:
        return StateVector.continuous(self.joints, {
            HUMAN_PROXIMITY: self.human_proximity,
            GEAR_HELD: float(self.gear_grasped),
        })

    def reset_to(self, joints: Sequence[float], gear_grasped: bool = False) -> StateVector:
        """Place the arms at joints (used to start an option mid-task)."""
        joints = np.asarray(joints, dtype=float)
        require_same_dimension(ASSEMBLY_DIMENSION, len(joints), "joint vector")
        self.joints = clip_joints(joints)
        self.gear_grasped = gear_grasped
        self.grasp_step = self.step_count if gear_grasped else None
        self.gear_inserted = False
        return self.observe()

    def step(self, action) -> StateVector:
        action = np.asarray(action, dtype=float)
        require_same_dimension(ASSEMBLY_DIMENSION, action.shape[-1], "joint action")
        noise = self._rng.normal(0.0, self.config.actuation_noise, ASSEMBLY_DIMENSION)
        human_draw = self._rng.random()
        if not self.gear_inserted:
            self.joints = clip_joints(self.joints + action + noise)
            self.step_count += 1
            self._update_phase()
            self._update_human(human_draw)
        return self.observe()

    def _update_phase(self):
        left = self.joints[LEFT]
        if not self.gear_grasped:
            if np.linalg.norm(left - self.config.grasp_left) <= self.config.grasp_tolerance:
                self.gear_grasped = True
                self.grasp_step = self.step_count
                logger.debug(f"Gear grasped at step {self.step_count}")
        elif np.linalg.norm(left - self.geometry.insertion_left) <= self.config.insertion_tolerance:
            self.gear_inserted = True
            logger.debug(f"Gear inserted at step {self.step_count}")

    def _forced_arrival_due(self) -> bool:
        forced = self.config.interference.forced_arrival_distance
        if forced is None or self._forced_arrival_done or not self.gear_grasped:
            return False
        return np.linalg.norm(self.joints[LEFT] - self.geometry.pre_left) <= forced

    def _update_human(self, draw: float):
        if not self.interference_enabled:
            return
        interference = self.config.interference
        if self._forced_arrival_due():
            self._forced_arrival_done = True
            self.human_present = True
        elif self.human_present:
            if draw < 1.0 / interference.mean_dwell:
                self.human_present = False
        elif draw < interference.arrival_probability:
            self.human_present = True


def make_assembly_env(config: Optional[AssemblyTaskConfig] = None, seed: int = 0,
                      interference: Optional[bool] = None) -> AssemblyEnv:
    return AssemblyEnv(config or AssemblyTaskConfig(), seed, interference)


# ============================================
# Options
# ============================================

def _human_rate(states: np.ndarray, context, scale: float) -> np.ndarray:
    distance = context.get(HUMAN_PROXIMITY, np.inf) if context else np.inf
    rate = scale / (distance + scale) if np.isfinite(distance) else 0.0
    return np.full(len(states), float(np.clip(rate, 0.0, 1.0)))


def _no_gear(states: np.ndarray, context) -> np.ndarray:
    held = context.get(GEAR_HELD, 1.0) if context else 1.0
    return np.full(len(states), 1.0 - float(np.clip(held, 0.0, 1.0)))


def _initiation_everywhere(state: StateVector) -> bool:
    return True


def make_assembly_options(config: Optional[AssemblyTaskConfig] = None) -> List[OptionSpec]:
    """The four assembly options with simulator dynamics."""
    config = config or AssemblyTaskConfig()
    geometry = AssemblyGeometry.from_config(config)
    width = config.threshold_width
    scale = config.human_scale
    noise = config.actuation_noise
    jitter = config.insertion_jitter

    def simulated(delta_fn: Callable[[np.ndarray], np.ndarray], left_jitter: float = 0.0):
        def dynamics(states, rng, context):
            nxt = states + delta_fn(states) + rng.normal(0.0, noise, states.shape)
            if left_jitter:
                nxt[:, LEFT] += rng.normal(0.0, left_jitter, (len(states), JOINTS_PER_ARM))
            return clip_joints(nxt)
        return dynamics

    def policy_of(delta_fn, left_jitter: float = 0.0):
        def policy(state: StateVector, rng: np.random.Generator) -> np.ndarray:
            action = delta_fn(state.as_array()[None, :])[0]
            if left_jitter:
                action[LEFT] += rng.normal(0.0, left_jitter, JOINTS_PER_ARM)
            return action
        return policy

    def arrived(states):
        return _near(geometry.left_distance(states, geometry.pre_left), config.convergence_threshold, width)

    def grasp_rate(states, context):
        converged = _near(np.linalg.norm(states - geometry.grasp, axis=1), config.grasp_threshold, width)
        return np.maximum(_human_rate(states, context, scale), converged)

    def quick_rate(states, context):
        return np.maximum.reduce([_human_rate(states, context, scale), arrived(states), _no_gear(states, context)])

    def cautious_rate(states, context):
        return np.maximum(arrived(states), _no_gear(states, context))

    def insert_rate(states, context):
        seated = _near(geometry.left_distance(states, geometry.insertion_left), config.insertion_threshold, width)
        outside = 1.0 - geometry.in_handover(states)
        return np.maximum.reduce([seated, outside, _no_gear(states, context)])

    layout = [
        (GRASP, "grasp", geometry.grasp_delta, 0.0, grasp_rate, MIXED),
        (QUICK, "quick-navigate", geometry.quick_delta, 0.0, quick_rate, PLANNER_SURROGATE),
        (CAUTIOUS, "cautious-navigate", geometry.cautious_delta, 0.0, cautious_rate, MIXED),
        (INSERT, "insert", geometry.insert_delta, jitter, insert_rate, LEARNED_SURROGATE),
    ]
    return [
        OptionSpec(
            id=option_id,
            name=name,
            state_kind=CONTINUOUS,
            dimension=ASSEMBLY_DIMENSION,
            policy=policy_of(delta_fn, extra),
            initiation=_initiation_everywhere,
            termination_rate=rate,
            dynamics=simulated(delta_fn, extra),
            kind=kind,
        )
        for option_id, name, delta_fn, extra, rate, kind in layout
    ]


def with_learned_dynamics(options: Sequence[OptionSpec], demos: DemonstrationSet,
                          config: Optional[DynamicsFitConfig] = None) -> List[OptionSpec]:
    """Replace each option's simulator dynamics with a model fitted on demos."""
    learned = []
    for option in options:
        model = learn_option_dynamics(demos, option.id, config, -JOINT_LIMIT, JOINT_LIMIT)
        learned.append(option.with_dynamics(model))
    return learned


# ============================================
# Scripted expert
# ============================================

def expert_choice(env: AssemblyEnv) -> int:
    """Grasp, then navigate (cautiously while a human is near), then insert."""
    if not env.gear_grasped:
        return GRASP
    geometry = env.geometry
    left = env.joints[LEFT]
    at_handover = np.linalg.norm(left - geometry.pre_left) <= 2 * env.config.convergence_threshold
    past_handover = (np.linalg.norm(left - geometry.insertion_left)
                     < np.linalg.norm(geometry.pre_left - geometry.insertion_left))
    if at_handover or past_handover:
        return INSERT
    return CAUTIOUS if env.human_near else QUICK


def run_expert(env: AssemblyEnv, options: Sequence[OptionSpec], seed: int, max_steps: int,
               trajectory_id: str) -> Trajectory:
    """
    Drive env to insertion with the scripted option sequence.

    Every record holds a state and the option acting from it; the final
    record repeats the last option and carries the done flag.

    Raises:
        ExpertFailure: insertion not reached within max_steps environment steps
    """
    by_id = {option.id: option for option in options}
    states = [env.observe()]
    actors: List[int] = []
    segment_index = 0
    while not env.terminal:
        if env.step_count >= max_steps:
            raise ExpertFailure(f"Expert did not insert the gear within {max_steps} steps")
        option = by_id[expert_choice(env)]
        segment, _ = execute_option(option, env, derive_seed(seed, segment_index), max_steps - env.step_count)
        states.extend(step.state for step in segment.steps)
        actors.extend([option.id] * len(segment))
        segment_index += 1

    if not actors:
        raise ExpertFailure("Episode started in a terminal state")
    last = len(states) - 1
    steps = [
        TrajectoryStep(t=t, state=state, option_id=actors[min(t, len(actors) - 1)], done=(t == last))
        for t, state in enumerate(states)
    ]
    return Trajectory(TASK_ID, trajectory_id, steps)


EnvFactory = Callable[[int, bool], AssemblyEnv]


def assembly_env_factory(config: AssemblyTaskConfig) -> EnvFactory:
    def factory(seed: int, interference: bool) -> AssemblyEnv:
        return make_assembly_env(config, seed, interference)
    return factory


def generate_demonstrations(
    env_factory: EnvFactory,
    options: Sequence[OptionSpec],
    count: int,
    interference: bool,
    seed: int,
    max_steps: int = 600,
    prefix: str = "demo",
) -> DemonstrationSet:
    """
    Record `count` successful expert runs.

    Failed runs are discarded and retried with a fresh seed; the number of
    retries is kept on the returned set.
    """
    if count < 1:
        raise DynoPlanError(f"Demonstration count must be at least 1, got {count}")

    trajectories: List[Trajectory] = []
    regenerated = 0
    attempt = 0
    while len(trajectories) < count:
        episode_seed = derive_seed(seed, DEMO_STREAM, attempt)
        attempt += 1
        env = env_factory(episode_seed, interference)
        try:
            trajectories.append(
                run_expert(env, options, episode_seed, max_steps, f"{prefix}-{len(trajectories)}")
            )
        except ExpertFailure as e:
            regenerated += 1
            logger.warning(f"Regenerating demonstration {len(trajectories)}: {e}")
            if regenerated > 10 * count:
                raise
    logger.info(f"Generated {count} demonstrations ({regenerated} regenerated, interference={interference})")
    return DemonstrationSet(trajectories, regenerated)
