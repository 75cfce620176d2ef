"""
Learned Option Dynamics

Affine-Gaussian one-step model s' = A s + b + noise, fitted by ridge least
squares on the demo transitions observed while an option was active.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ..core.errors import DemonstrationError
from ..data.models import DemonstrationSet
from ..models.schemas import DynamicsFitConfig

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class AffineGaussianDynamics:
    option_id: int
    A: np.ndarray              # (d, d)
    b: np.ndarray              # (d,)
    noise_covariance: np.ndarray  # (d, d)
    transitions: int = 0
    residual_rms: float = 0.0
    lower: Optional[float] = None
    upper: Optional[float] = None

    def __post_init__(self):
        self._noise_factor = np.linalg.cholesky(self.noise_covariance)

    @property
    def dimension(self) -> int:
        return len(self.b)

    def predict_mean(self, states: np.ndarray) -> np.ndarray:
        return states @ self.A.T + self.b

    def __call__(self, states: np.ndarray, rng: np.random.Generator,
                 context: Optional[Mapping[str, float]] = None) -> np.ndarray:
        noise = rng.standard_normal(states.shape) @ self._noise_factor.T
        nxt = self.predict_mean(states) + noise
        if self.lower is not None or self.upper is not None:
            nxt = np.clip(nxt, self.lower, self.upper)
        return nxt


def learn_option_dynamics(
    demos: DemonstrationSet,
    option_id: int,
    config: Optional[DynamicsFitConfig] = None,
    lower: Optional[float] = None,
    upper: Optional[float] = None,
) -> AffineGaussianDynamics:
    """
    Fit an affine-Gaussian model for option_id.

    The change of state is regressed on the centered state, so a zero-motion
    option fits to A = I, b = 0 and a pure translation to A = I, b = offset.

    Raises:
        DemonstrationError: fewer than config.min_transitions transitions
    """
    config = config or DynamicsFitConfig()
    X, Y = demos.transitions(option_id)
    if len(X) < config.min_transitions:
        raise DemonstrationError(
            f"Option {option_id} has {len(X)} demo transitions; {config.min_transitions} are required"
        )

    d = X.shape[1]
    x_mean = X.mean(axis=0)
    delta = Y - X
    delta_mean = delta.mean(axis=0)
    centered = X - x_mean

    # Ridge as extra rows: min |centered D^T - delta_c|^2 + ridge |D|^2
    design = np.vstack([centered, np.sqrt(config.ridge) * np.eye(d)])
    target = np.vstack([delta - delta_mean, np.zeros((d, d))])
    solution, _, _, _ = np.linalg.lstsq(design, target, rcond=None)

    A = np.eye(d) + solution.T
    b = delta_mean + x_mean - A @ x_mean
    residuals = Y - (X @ A.T + b)
    noise = residuals.T @ residuals / len(X) + config.noise_floor * np.eye(d)
    rms = float(np.sqrt(np.mean(residuals ** 2)))

    logger.info(f"Fitted dynamics for option {option_id} on {len(X)} transitions (residual rms {rms:.2e})")
    return AffineGaussianDynamics(option_id, A, b, 0.5 * (noise + noise.T), len(X), rms, lower, upper)
