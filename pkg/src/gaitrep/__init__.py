"""Gait replication toolkit for a two-link (hip + knee) robotic leg.

The package simulates SDRE-optimal torque tracking of a desired joint-angle
profile and fits motor-compatible piecewise-linear velocity command
schedules that minimize the torque mismatch against that reference.
"""

from .dynamics import (
    DEFAULT_LEG,
    JointState,
    JointTorque,
    LegParams,
    coriolis_matrix,
    forward_dynamics,
    gravity_matrix,
    inverse_dynamics,
    inverse_dynamics_series,
    mass_matrix,
    mechanical_energy,
    rk4_step,
)
from .errors import (
    DomainMismatch,
    GaitRepError,
    InfeasibleBounds,
    MaxIterationsWarning,
    NotStabilizable,
    NumericalFailure,
    OutOfDomain,
    ParseError,
    SimulationDiverged,
    TooFewSamples,
    ValidationError,
)
from .gait import (
    GaitProfile,
    NodeSequence,
    differentiate,
    load_profile,
    resample,
    save_profile,
    select_nodes,
    synthetic_squat,
    synthetic_walk,
)
from .plans import (
    DEFAULT_WEIGHTS,
    MotorCommand,
    PlanBounds,
    PlanOptimization,
    PlanTrajectory,
    VelocityPlan,
    as_weight_matrix,
    commands_to_plan,
    default_plans,
    eval_velocity,
    evaluate_plans,
    integrate_plan,
    optimize_plan,
    plan_cost,
    plan_to_commands,
)
from .riccati import (
    CareProblem,
    CareSolution,
    care_residual,
    hautus_detectable,
    hautus_stabilizable,
    newton_kleinman,
    solve_care,
)
from .sdre import (
    DEFAULT_GAINS,
    ControlGains,
    DesiredSample,
    ErrorState,
    SdcModel,
    TrackingResult,
    build_sdc,
    g_f_term,
    sdre_feedback,
    simulate_tracking,
)

__version__ = "0.1.0"
