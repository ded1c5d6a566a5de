"""Deterministic vehicle-dynamics simulator with a fuzzy-logic stability
program, an anti-lock brake layer and a trajectory-tracking autopilot,
built around tyre-burst scenarios."""

from .autopilot import Autopilot, Bend, TrackingError, Trajectory, kinematic_steer, trajectory_eval
from .braking import AbsController, BrakeCommand, BrakeDemand, brake_distributor, brake_modulator
from .fuzzy import (
    CrispOutput,
    FuzzyRuleBase,
    FuzzyVariable,
    MembershipFunction,
    RuleBaseError,
    builtin_rule_base,
    defuzzify,
    fuzzify,
    infer,
    load_rule_base,
)
from .report import RunMetrics, compute_metrics, export, sweep, unwrapped_beta_rad
from .runner import SimTrace, run
from .scenario import Scenario, ScenarioError, load_scenario, scenario_from_dict
from .stability import (
    DispenseResult,
    IespConfig,
    IespOutput,
    SlipAngleEstimator,
    StabilityController,
    StabilityErrors,
    compute_errors,
    dispense,
    reference_slip_angle,
    reference_yaw_rate,
    yaw_rate_limit,
)
from .tyres import (
    BurstEvent,
    DeflatedFrictionModel,
    InflatedFrictionModel,
    TyreContactState,
    compute_slip,
    friction_deflated,
    friction_inflated,
    inflation_blend,
    tyre_force,
)
from .vehicle import (
    ActuationSet,
    SimulationFault,
    VehicleParameters,
    VehiclePlant,
    VehicleState,
    rigid_body_derivatives,
    rk4_step,
    vertical_loads,
)

__version__ = "0.1.0"
