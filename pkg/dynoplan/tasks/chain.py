"""
Chain Benchmark

Random-walk chain with states 1..19 and a rewarding terminal state 20.
Five options: three right-movers with different termination rates, a
random mover and a left-mover. Noisy models mispredict the next state (or
the goal value) by substituting an adjacent state.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import DynoPlanError, StateRangeError, require_probability
from ..core.options import TABULAR, OptionSpec
from ..data.models import DISCRETE, DemonstrationSet, StateVector, Trajectory, TrajectoryStep
from ..models.schemas import NoisyModelConfig

logger = logging.getLogger(__name__)

TASK_ID = "chain"
FIRST_STATE = 1
TERMINAL_STATE = 20
LEFT = "left"
RIGHT = "right"

DEFAULT_BETAS = (0.2, 0.5, 0.9, 0.5, 0.5)

# option name -> (probability of left, probability of right)
MOVES: Dict[str, Tuple[float, float]] = {
    "right": (0.0, 1.0),
    "random": (0.5, 0.5),
    "left": (1.0, 0.0),
}


class ChainEnv:
    """Mutable chain handle; the terminal state is absorbing."""

    task_id = TASK_ID

    def __init__(self, start_state: int = FIRST_STATE):
        if not FIRST_STATE <= start_state <= TERMINAL_STATE:
            raise StateRangeError(f"Chain start state {start_state} outside {FIRST_STATE}..{TERMINAL_STATE}")
        self.state = start_state
        self.reward = 0.0
        self.total_reward = 0.0
        self.steps = 0

    @property
    def terminal(self) -> bool:
        return self.state == TERMINAL_STATE

    def observe(self) -> StateVector:
        return StateVector.discrete(self.state)

    def step(self, action: str) -> StateVector:
        if action not in (LEFT, RIGHT):
            raise DynoPlanError(f"Unknown chain action: {action!r}")
        self.reward = 0.0
        if not self.terminal:
            self.state = max(FIRST_STATE, self.state + (1 if action == RIGHT else -1))
            self.steps += 1
            if self.terminal:
                self.reward = 1.0
                self.total_reward += 1.0
        return self.observe()


def make_chain_env(start_state: int = FIRST_STATE) -> ChainEnv:
    return ChainEnv(start_state)


# ============================================
# Vectorized true dynamics
# ============================================

def _shift(states: np.ndarray, delta: np.ndarray) -> np.ndarray:
    moved = np.clip(states + delta, FIRST_STATE, TERMINAL_STATE)
    return np.where(states >= TERMINAL_STATE, states, moved)


def _right_dynamics(states, rng, context):
    return _shift(states, np.ones_like(states))


def _left_dynamics(states, rng, context):
    return _shift(states, -np.ones_like(states))


def _random_dynamics(states, rng, context):
    delta = np.where(rng.random(len(states)) < 0.5, -1.0, 1.0)[:, None]
    return _shift(states, delta)


def _right_policy(state, rng):
    return RIGHT


def _left_policy(state, rng):
    return LEFT


def _random_policy(state, rng):
    return LEFT if rng.random() < 0.5 else RIGHT


def _termination(beta: float):
    def rate(states, context):
        return np.where(states[:, 0] >= TERMINAL_STATE, 1.0, beta)
    return rate


def chain_initiation(state: StateVector) -> bool:
    """Every non-terminal chain state."""
    index = state.index
    if not FIRST_STATE <= index <= TERMINAL_STATE:
        raise StateRangeError(f"Chain state {index} outside {FIRST_STATE}..{TERMINAL_STATE}")
    return index < TERMINAL_STATE


def make_chain_options(beta_assignment: Sequence[float] = DEFAULT_BETAS) -> List[OptionSpec]:
    """Options 1-3 move right, 4 moves randomly, 5 moves left."""
    if len(beta_assignment) != 5:
        raise DynoPlanError(f"Expected 5 termination rates, got {len(beta_assignment)}")
    for i, beta in enumerate(beta_assignment, start=1):
        require_probability(beta, f"termination rate of option {i}", allow_zero=False)

    layout = [
        ("right", _right_policy, _right_dynamics),
        ("right", _right_policy, _right_dynamics),
        ("right", _right_policy, _right_dynamics),
        ("random", _random_policy, _random_dynamics),
        ("left", _left_policy, _left_dynamics),
    ]
    return [
        OptionSpec(
            id=i,
            name=name,
            state_kind=DISCRETE,
            dimension=1,
            policy=policy,
            initiation=chain_initiation,
            termination_rate=_termination(float(beta)),
            dynamics=dynamics,
            kind=TABULAR,
        )
        for i, ((name, policy, dynamics), beta) in enumerate(zip(layout, beta_assignment), start=1)
    ]


# ============================================
# Noisy models
# ============================================

def _adjacent(states: np.ndarray, pick_lower: np.ndarray) -> np.ndarray:
    """states - 1 or states + 1 as requested, clipped to 1..20 (so an end state can report itself)."""
    return np.clip(np.where(pick_lower, states - 1, states + 1), FIRST_STATE, TERMINAL_STATE)


def _noisy(dynamics, epsilon: float):
    def model(states, rng, context):
        true_next = dynamics(states, rng, context)
        mispredict = rng.random(len(states)) < epsilon
        pick_lower = rng.random(len(states)) < 0.5
        wrong = _adjacent(true_next, pick_lower[:, None])
        return np.where(mispredict[:, None], wrong, true_next)
    return model


def progress(states: np.ndarray) -> np.ndarray:
    """g(s) = (s - 1) / 19."""
    return np.clip((states - FIRST_STATE) / (TERMINAL_STATE - FIRST_STATE), 0.0, 1.0)


class ChainProgressGoal:
    """
    Analytic chain progress, optionally reporting a neighbor's value with
    probability epsilon.

    Noise is applied in evaluate_batch when a generator is supplied (or a
    seed was given at construction). evaluate() is always noiseless.
    """

    task_id = TASK_ID
    kind = DISCRETE
    dimension = 1

    def __init__(self, epsilon: float = 0.0, seed: Optional[int] = None):
        require_probability(epsilon, "epsilon")
        self.epsilon = epsilon
        self._rng = np.random.default_rng(seed) if seed is not None else None

    def evaluate(self, state: StateVector) -> Tuple[float, float]:
        return float(progress(np.array([state.index], dtype=float))[0]), 0.0

    def evaluate_batch(self, states: np.ndarray, rng: Optional[np.random.Generator] = None):
        states = np.asarray(states, dtype=float)[:, 0]
        rng = rng or self._rng
        if rng is None or self.epsilon == 0:
            return progress(states), np.zeros(len(states))
        mispredict = rng.random(len(states)) < self.epsilon
        pick_lower = rng.random(len(states)) < 0.5
        reported = np.where(mispredict, _adjacent(states, pick_lower), states)
        return progress(reported), np.zeros(len(states))


def make_noisy_models(options: Sequence[OptionSpec], config: Optional[NoisyModelConfig] = None,
                      seed: Optional[int] = None) -> Tuple[List[OptionSpec], ChainProgressGoal]:
    """Options with mispredicting dynamics, plus the matching noisy goal model."""
    config = config or NoisyModelConfig()
    require_probability(config.epsilon, "epsilon")
    noisy = [option.with_dynamics(_noisy(option.dynamics, config.epsilon)) for option in options]
    return noisy, ChainProgressGoal(config.epsilon, seed)


# ============================================
# Exact enumeration and demonstrations
# ============================================

def exact_end_distribution(option: OptionSpec, start: int, horizon: int) -> np.ndarray:
    """
    Probability of each state 1..20 at the end of a noiseless rollout.

    Returns an array of length 21 indexed by state (entry 0 unused).
    """
    p_left, p_right = MOVES[option.name]
    beta = option.beta(StateVector.discrete(FIRST_STATE))
    active = np.zeros(TERMINAL_STATE + 1)
    stopped = np.zeros(TERMINAL_STATE + 1)
    active[start] = 1.0
    for _ in range(horizon):
        moved = np.zeros_like(active)
        for s in range(FIRST_STATE, TERMINAL_STATE):
            moved[max(s - 1, FIRST_STATE)] += p_left * active[s]
            moved[s + 1] += p_right * active[s]
        moved[TERMINAL_STATE] += active[TERMINAL_STATE]
        rates = np.full_like(moved, beta)
        rates[TERMINAL_STATE] = 1.0
        stopped += moved * rates
        active = moved * (1.0 - rates)
    return active + stopped


def exact_option_value(option: OptionSpec, start: int, horizon: int) -> float:
    """Expected true progress at the end of a noiseless rollout."""
    if not chain_initiation(StateVector.discrete(start)):
        return 0.0
    distribution = exact_end_distribution(option, start, horizon)
    states = np.arange(TERMINAL_STATE + 1, dtype=float)
    return float(np.sum(distribution[FIRST_STATE:] * progress(states[FIRST_STATE:])))


def chain_demonstrations(count: int, start_state: int = FIRST_STATE) -> DemonstrationSet:
    """Straight right walks from start_state to the terminal state under option 1."""
    trajectories = []
    for n in range(count):
        indices = range(start_state, TERMINAL_STATE + 1)
        steps = [
            TrajectoryStep(t=t, state=StateVector.discrete(s), option_id=1, done=(s == TERMINAL_STATE))
            for t, s in enumerate(indices)
        ]
        trajectories.append(Trajectory(TASK_ID, f"demo-{n}", steps))
    return DemonstrationSet(trajectories)
