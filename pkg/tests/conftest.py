import os
import sys

import numpy as np
import pytest

# Add repository root to Python path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dynoplan.data.models import DemonstrationSet, StateVector, Trajectory, TrajectoryStep


def line_trajectory(start, step, count, option_id=1, trajectory_id="line", task_id="test"):
    """Continuous trajectory moving by a constant offset each step."""
    start = np.asarray(start, dtype=float)
    step = np.asarray(step, dtype=float)
    steps = [
        TrajectoryStep(t=t, state=StateVector.continuous(start + t * step), option_id=option_id,
                       done=(t == count - 1))
        for t in range(count)
    ]
    return Trajectory(task_id, trajectory_id, steps)


@pytest.fixture
def line_demos():
    return DemonstrationSet([line_trajectory([0.0, 0.0], [1.0, 0.5], 11)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
