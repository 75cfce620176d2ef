# Models module - Pydantic schemas
from .schemas import (
    # Planner
    PlannerConfig,

    # Learning
    GoalFitConfig,
    EmConfig,
    RegionsConfig,
    DynamicsFitConfig,

    # Tasks
    NoisyModelConfig,
    ChainTaskConfig,
    InterferenceConfig,
    AssemblyTaskConfig,

    # Experiment
    ExperimentConfig,

    # Trajectory file
    TrajectoryRecord,
)

__all__ = [
    'PlannerConfig',
    'GoalFitConfig',
    'EmConfig',
    'RegionsConfig',
    'DynamicsFitConfig',
    'NoisyModelConfig',
    'ChainTaskConfig',
    'InterferenceConfig',
    'AssemblyTaskConfig',
    'ExperimentConfig',
    'TrajectoryRecord',
]
