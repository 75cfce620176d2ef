"""
Pydantic Models / Schemas

Experiment configuration and the trajectory line record. Every model
rejects unknown keys and every field has a default, so a config file only
needs to name what it changes.
"""

from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Extra, Field, StrictBool, StrictFloat, StrictInt, StrictStr, conint, validator

JOINTS_PER_ARM = 6
ASSEMBLY_DIMENSION = 2 * JOINTS_PER_ARM


class StrictModel(BaseModel):
    class Config:
        extra = Extra.forbid
        validate_assignment = True


def _validate_pose(length: int):
    """Shared validator factory for joint-pose lists."""
    def check(cls, v):
        if len(v) != length:
            raise ValueError(f"pose must have {length} joint values, got {len(v)}")
        return v
    return check


# ============================================
# Planner
# ============================================

class PlannerConfig(StrictModel):
    horizon: int = Field(10, ge=1, description="rollout horizon n")
    rollouts: int = Field(64, ge=1, description="Monte Carlo rollouts R per option")
    goal_success_threshold: float = Field(0.95, gt=0, le=1)
    max_planning_steps: int = Field(50, ge=1)
    max_option_steps: int = Field(200, ge=1, description="cap on real environment steps per executed option")
    max_horizon: int = Field(10_000, ge=1)
    tie_break: Literal["lowest-id"] = "lowest-id"
    seed: int = 0

    @validator("max_horizon")
    def horizon_fits(cls, v, values):
        if "horizon" in values and values["horizon"] > v:
            raise ValueError("horizon exceeds max_horizon")
        return v


# ============================================
# Learning
# ============================================

class GoalFitConfig(StrictModel):
    k: int = Field(8, ge=1, description="neighbor count")
    bandwidth: Optional[float] = Field(None, gt=0, description="kernel bandwidth; median pairwise distance when unset")
    label_scheme: Literal["normalized-time"] = "normalized-time"


class EmConfig(StrictModel):
    n_components: Optional[int] = Field(None, ge=1, description="M; 3 x number of options when unset")
    max_iterations: int = Field(200, ge=1)
    tolerance: float = Field(1e-6, gt=0)
    reg_floor: float = Field(1e-6, gt=0)
    init: Literal["kmeans++"] = "kmeans++"
    seed: int = 0


class RegionsConfig(StrictModel):
    density_floor: float = Field(1e-3, gt=0)


class DynamicsFitConfig(StrictModel):
    min_transitions: int = Field(50, ge=1)
    ridge: float = Field(1e-6, ge=0)
    noise_floor: float = Field(1e-10, gt=0)


# ============================================
# Chain benchmark
# ============================================

class NoisyModelConfig(StrictModel):
    epsilon: float = Field(0.2, ge=0, le=1, description="misprediction probability")
    scheme: Literal["uniform-neighbor"] = "uniform-neighbor"


class ChainTaskConfig(StrictModel):
    noise: NoisyModelConfig = NoisyModelConfig()
    beta_assignment: List[float] = [0.2, 0.5, 0.9, 0.5, 0.5]
    start_state: int = Field(1, ge=1, le=19)
    goal_mode: Literal["analytic", "fitted"] = "analytic"
    demo_count: int = Field(10, ge=1)

    @validator("beta_assignment")
    def five_rates(cls, v):
        if len(v) != 5:
            raise ValueError(f"expected 5 termination rates, got {len(v)}")
        for rate in v:
            if not 0 < rate <= 1:
                raise ValueError(f"termination rate {rate} outside (0, 1]")
        return v


# ============================================
# Assembly surrogate
# ============================================

class InterferenceConfig(StrictModel):
    enabled: bool = True
    arrival_probability: float = Field(0.02, ge=0, le=1)
    mean_dwell: float = Field(15.0, ge=1, description="mean of the geometric dwell duration in steps")
    present_proximity: float = Field(0.01, ge=0)
    absent_proximity: float = Field(1e4, gt=0)
    forced_arrival_distance: Optional[float] = Field(
        None, gt=0, description="a human always arrives once the carried gear is this close to the pre-assembly pose")


class AssemblyTaskConfig(StrictModel):
    interference: InterferenceConfig = InterferenceConfig()
    start_pose: List[float] = [0.0, 1.0, 0.0, -1.5, 0.0, 0.0, 0.0, 1.0, 0.0, -1.5, 0.0, 0.0]
    start_box_halfwidth: float = Field(0.05, ge=0)
    grasp_left: List[float] = [0.5, 0.3, 0.2, -1.0, 0.4, 0.0]
    present_right: List[float] = [-0.4, 0.4, -0.3, -0.9, -0.5, 0.0]
    via_left: List[float] = [0.0, 0.4, 0.9, -1.0, 1.2, 0.3]
    pre_assembly_left: List[float] = [-0.3, 0.0, 0.6, -0.6, 1.0, 0.5]
    insertion_left: List[float] = [-0.35, -0.1, 0.65, -0.5, 1.05, 0.5]
    # grasp, quick navigation, cautious navigation, insertion
    step_fractions: List[float] = [0.2, 0.35, 0.22, 0.1]
    cautious_turn: float = Field(0.25, ge=0, le=1.0, description="radians the cautious arc turns toward the via side per step")
    handover_radius: float = Field(0.22, gt=0, description="insertion only makes progress this close to the pre-assembly pose")
    insertion_jitter: float = Field(0.003, ge=0)
    actuation_noise: float = Field(0.002, ge=0)
    grasp_tolerance: float = Field(0.06, gt=0)
    insertion_tolerance: float = Field(0.03, gt=0)
    grasp_threshold: float = Field(0.03, gt=0, description="grasp option stop distance")
    convergence_threshold: float = Field(0.05, gt=0, description="navigation options stop distance")
    insertion_threshold: float = Field(0.015, gt=0)
    threshold_width: float = Field(0.004, gt=0)
    human_scale: float = Field(1.0, gt=0, description="c in beta = c / (distance + c)")
    demo_count: int = Field(10, ge=1)
    interference_demo_count: int = Field(10, ge=0)
    forced_demo_arrival_distance: float = Field(0.7, gt=0)
    held_out_count: int = Field(2, ge=0)
    expert_max_steps: int = Field(600, ge=10)
    dynamics: Literal["fitted", "oracle"] = "fitted"
    dynamics_fit: DynamicsFitConfig = DynamicsFitConfig()

    _check_start = validator("start_pose", allow_reuse=True)(_validate_pose(ASSEMBLY_DIMENSION))
    _check_grasp = validator("grasp_left", allow_reuse=True)(_validate_pose(JOINTS_PER_ARM))
    _check_present = validator("present_right", allow_reuse=True)(_validate_pose(JOINTS_PER_ARM))
    _check_via = validator("via_left", allow_reuse=True)(_validate_pose(JOINTS_PER_ARM))
    _check_pre = validator("pre_assembly_left", allow_reuse=True)(_validate_pose(JOINTS_PER_ARM))
    _check_insert = validator("insertion_left", allow_reuse=True)(_validate_pose(JOINTS_PER_ARM))

    @validator("step_fractions")
    def four_fractions(cls, v):
        if len(v) != 4 or any(not 0 < f <= 1 for f in v):
            raise ValueError("step_fractions needs 4 values in (0, 1]")
        return v


# ============================================
# Experiment
# ============================================

class ExperimentConfig(StrictModel):
    task: Literal["chain", "assembly"] = "chain"
    seed: int = 0
    episodes: int = Field(100, ge=1)
    output_dir: str = "results"
    planner: PlannerConfig = PlannerConfig()
    chain: ChainTaskConfig = ChainTaskConfig()
    assembly: AssemblyTaskConfig = AssemblyTaskConfig()
    goal_fit: GoalFitConfig = GoalFitConfig()
    em: EmConfig = EmConfig()
    regions: RegionsConfig = RegionsConfig()


# ============================================
# Trajectory line record
# ============================================

class TrajectoryRecord(StrictModel):
    task_id: StrictStr
    trajectory_id: StrictStr
    t: conint(strict=True, ge=0)
    state: Union[StrictInt, List[Union[StrictFloat, StrictInt]]]
    option_id: StrictInt
    done: StrictBool
