"""Deterministic simulator of multi-robot rigid-formation navigation.

A master robot follows a preplanned velocity schedule while computing
error-correcting commands for its slaves each control cycle. Commands cross
a lossy link and take effect simultaneously on every robot at a fixed
fraction of the cycle; on loss a slave holds its previous command. The
per-slave commands minimize the expected weighted formation error one cycle
ahead under the assumed delivery probability.
"""

from .geometry import IDENTITY, Pose, compose, relative_pose, wrap_angle
from .kinematics import (
    NoiseModel,
    VelocityCommand,
    ZERO_COMMAND,
    apply_actuation_noise,
    unicycle_step,
)
from .formation import (
    ErrorVec,
    FormationSpec,
    WeightMatrix,
    formation_error,
    square_formation,
    weighted_error_norm,
)
from .netproto import (
    CycleTiming,
    ExecutionPlan,
    LinkModel,
    ProtocolState,
    Segment,
    advance_cycle,
    sample_delivery,
    two_segment_plan,
)
from .control import (
    ControlInputState,
    DemParams,
    baseline_pd_command,
    clamp_command,
    dem_command,
    dem_objective,
    grid_oracle_minimize,
    predict_error_next,
)
from .scenario import (
    ExperimentConfig,
    MasterSchedule,
    RunTrace,
    build_group,
    make_config,
    run_batch,
    run_simulation,
    s_path_schedule,
    straight_schedule,
    stream_for_run,
)
from .metrics import ConfigSummary, ErrorSample, selected_cycles, summarize, trace_samples

__version__ = "0.1.0"

__all__ = [
    "IDENTITY",
    "Pose",
    "compose",
    "relative_pose",
    "wrap_angle",
    "NoiseModel",
    "VelocityCommand",
    "ZERO_COMMAND",
    "apply_actuation_noise",
    "unicycle_step",
    "ErrorVec",
    "FormationSpec",
    "WeightMatrix",
    "formation_error",
    "square_formation",
    "weighted_error_norm",
    "CycleTiming",
    "ExecutionPlan",
    "LinkModel",
    "ProtocolState",
    "Segment",
    "advance_cycle",
    "sample_delivery",
    "two_segment_plan",
    "ControlInputState",
    "DemParams",
    "baseline_pd_command",
    "clamp_command",
    "dem_command",
    "dem_objective",
    "grid_oracle_minimize",
    "predict_error_next",
    "ExperimentConfig",
    "MasterSchedule",
    "RunTrace",
    "build_group",
    "make_config",
    "run_batch",
    "run_simulation",
    "s_path_schedule",
    "straight_schedule",
    "stream_for_run",
    "ErrorSample",
    "ConfigSummary",
    "selected_cycles",
    "summarize",
    "trace_samples",
    "__version__",
]
