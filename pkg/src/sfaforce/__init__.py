"""Intrinsic force sensing and control for hydraulic soft fluidic actuators.

Provides a ground-truth plant simulator, calibration routines (stiffness,
damping, transmission), static/quasi-static/dynamic force estimators, force
PID controllers for a single actuator and a parallel three-actuator
end-effector, and a scenario harness with a CLI.
"""

from .core import (
    ActuatorState,
    RankDeficientError,
    SingularTransformError,
    invert_transform,
    solve_least_squares,
)
from .kinematics import (
    SeeGeometry,
    TipPose,
    UncontrollableGeometryError,
    actuator_to_cartesian,
    build_wrench_transform,
    cartesian_to_actuator,
    constant_curvature_pose,
    default_see_geometry,
)
from .plant import (
    ContactModel,
    DampingLaw,
    NoiseTable,
    Plant,
    PlantConfig,
    PlantState,
    RelaxationConfig,
    damping_pressure,
    measure,
    plant_step,
    steady_state,
)
from .sensing import (
    ForceEstimate,
    SensingModel,
    capture_baseline,
    estimate_dynamic,
    estimate_quasistatic,
    estimate_static,
    to_cartesian,
)
from .calib import (
    CalibrationError,
    DampingFit,
    DampingTrajectory,
    StiffnessSample,
    TransmissionCalibration,
    TransmissionMap,
    TransmissionSample,
    calibrate_damping,
    calibrate_stiffness,
    calibrate_transmission,
    load_artifact,
    save_artifact,
)
from .control import (
    ControllerConfig,
    LoopSegment,
    LoopState,
    PidGains,
    TimeSeriesLog,
    ema_alpha,
    ema_step,
    read_time_series,
    run_closed_loop,
    see_pid_step,
    sfa_pid_step,
)

__version__ = "0.1.0"
