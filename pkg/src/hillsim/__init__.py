"""Spacecraft relative motion flown by a micro-quadcopter surrogate.

Clohessy-Wiltshire trajectories are generated in Hill's frame, scaled into a
lab flight volume, resampled into fixed-rate waypoints and tracked by a
linearized quadcopter under a PID position / PD attitude controller.
"""

__version__ = "0.1.0"

from ._accel import USE_NUMBA
from .control import ControllerState, GainSet, attitude_control, position_control, reset
from .cw import (
    ControlThrust,
    DiscreteTransition,
    HillState,
    LinearSystem,
    OrbitalContext,
    TransitionMode,
    bk_validation_report,
    build_continuous_system,
    closure_residuals,
    cw_derivative,
    discrete_transition,
    nmt_initial_conditions,
    propagate_continuous,
    propagate_discrete,
)
from .docking import (
    DockingConfig,
    PDDockingPolicy,
    ZeroPolicy,
    load_trajectory_record,
    run_closed_loop,
    safe_random_initial_state,
    save_trajectory_record,
)
from .errors import HillsimError
from .plant import DroneParams, DroneState, PlantCommand, build_subsystems, pwm_to_rpm, rpm_to_pwm, step_plant
from .scaling import LabVolume, ScaleConfig, WaypointList, check_bounds, resample_waypoints, scale_to_lab
from .simulation import SimConfig, SimLog, SwarmMember, TrackingMetrics, compute_metrics, run_swarm, run_tracking
from .trajectory import SampledTrajectory
