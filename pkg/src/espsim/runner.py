"""Closed-loop simulation: the plant advances at the physics step while
the autopilot, stability program and ABS run at the controller period
with zero-order hold.  A run is fully deterministic: the same scenario
produces a bit-identical trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autopilot import Autopilot
from .braking import AbsController
from .fuzzy import builtin_rule_base, load_rule_base
from .scenario import Scenario
from .stability import IespOutput, StabilityController
from .tyres import WHEEL_NAMES
from .vehicle import (
    IDX_VX,
    IDX_VY,
    IDX_WX,
    IDX_WZ,
    ActuationSet,
    SimulationFault,
    VehiclePlant,
    VehicleState,
    rk4_step,
    vertical_loads,
)

#: Proportional cruise-hold gain [throttle per m/s of speed error].
CRUISE_GAIN = 0.5

TRACE_COLUMNS = (
    "time_s",
    "x_m", "y_m", "yaw_rad", "pitch_rad", "roll_rad",
    "vx_mps", "vy_mps", "yaw_rate_radps", "speed_mps",
    "beta_rad",
    "steer_rad", "throttle", "engine_torque_nm", "torque_cut_pct",
    "brake_fl_nm", "brake_fr_nm", "brake_rl_nm", "brake_rr_nm",
    "delta_m_yaw_nm",
    "beta_ref_rad", "psidot_ref_radps", "psidot_limit_radps",
    "e_beta_rad", "e_psidot_radps", "beta_hat_rad",
    "sigma_fl", "sigma_fr", "sigma_rl", "sigma_rr",
    "load_fl_n", "load_fr_n", "load_rl_n", "load_rr_n",
    "offset_m",
    "traj_err_inst_m", "traj_err_mean_m",
)


@dataclass
class SimTrace:
    """Uniformly sampled time series of the run, one row per controller
    tick, plus the fault record if the run aborted early."""

    columns: dict[str, np.ndarray]
    period_s: float
    fault: str | None = None
    fault_time_s: float | None = None

    def __len__(self) -> int:
        return len(self.columns["time_s"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def column_names(self) -> tuple[str, ...]:
        return TRACE_COLUMNS


def _resolve_rulebase(spec: str, builtin_name: str):
    if spec == "builtin":
        return builtin_rule_base(builtin_name)
    return load_rule_base(spec)


def run(scenario: Scenario) -> SimTrace:
    """Simulate a scenario to completion (or fault) and return the trace."""
    plant = VehiclePlant(
        scenario.vehicle, scenario.inflated, scenario.deflated, scenario.burst
    )
    start = scenario.trajectory.eval(0.0)
    y = plant.initial_state(
        start.x_m, start.y_m, start.heading_rad, scenario.initial_speed_mps
    )
    pilot = Autopilot(
        scenario.trajectory, scenario.vehicle,
        _resolve_rulebase(scenario.rule_bases["autopilot_steer"], "autopilot_steer"),
    )
    iesp = StabilityController(
        scenario.vehicle, scenario.iesp_config,
        _resolve_rulebase(scenario.rule_bases["yaw_moment"], "yaw_moment"),
        _resolve_rulebase(scenario.rule_bases["torque_cut"], "torque_cut"),
    )
    abs_ctrl = AbsController(
        scenario.vehicle,
        _resolve_rulebase(scenario.rule_bases["abs_modulator"], "abs_modulator"),
    )

    dt = scenario.dt_s
    period = scenario.controller_period_s
    every = round(period / dt)
    n_steps = round(scenario.duration_s / dt)
    v_target = scenario.initial_speed_mps
    burst_time = scenario.burst.t_start if scenario.burst is not None else math.inf
    max_brake = scenario.vehicle.brake_max_torque_nm

    act = ActuationSet()
    rows: list[list[float]] = []
    fault = None
    fault_time = None

    for k in range(n_steps + 1):
        t = k * dt
        if k % every == 0:
            try:
                out = plant.outputs(t, y, act)
            except SimulationFault as exc:
                fault, fault_time = str(exc), exc.time
                break
            state = VehicleState.from_array(y)
            speed = math.hypot(state.vx_mps, state.vy_mps)
            yaw_rate = y[IDX_WZ]
            # controller-frame accelerations: deceleration-positive and
            # rightward-positive (see vertical_loads)
            a_long_ctrl = -out.accel_long_mps2
            a_trasv_ctrl = -out.accel_trasv_mps2

            steer = pilot.pilot_command(
                state.x_m, state.y_m, state.yaw_rad, yaw_rate, speed, period
            )

            if scenario.iesp_enabled:
                ctrl_loads = vertical_loads(scenario.vehicle, a_long_ctrl, a_trasv_ctrl)
                iesp_out = iesp.tick(
                    steer, speed, yaw_rate, out.accel_trasv_mps2, tuple(ctrl_loads), period
                )
            else:
                iesp_out = None

            pedal = scenario.pedals.brake(t)
            cruise_active = (
                scenario.pedals.cruise_hold
                and scenario.pedals.throttle_steps is None
                and t < burst_time
                and pedal == 0.0
            )
            if cruise_active:
                throttle = min(max(CRUISE_GAIN * (v_target - speed), 0.0), 1.0)
            else:
                throttle = scenario.pedals.throttle(t)
            cut = iesp_out.torque_cut_percent if iesp_out is not None else 0.0
            engine = throttle * scenario.vehicle.engine_max_torque_nm * (1.0 - cut / 100.0)

            deltas = iesp_out.brake_deltas_nm if iesp_out is not None else (0.0,) * 4
            if scenario.abs_enabled:
                command = abs_ctrl.tick(
                    pedal, deltas, out.sigma, a_long_ctrl, a_trasv_ctrl, period
                )
                brakes = command.torques_nm
            else:
                brakes = tuple(
                    min(max(pedal * max_brake + deltas[i], 0.0), max_brake)
                    for i in range(4)
                )
            act = ActuationSet(
                steer_rad=steer,
                throttle=throttle,
                brake_torques_nm=brakes,
                engine_torque_nm=engine,
            )
            rows.append(_trace_row(t, state, speed, out, act, cut, iesp_out, pilot))
        if k == n_steps:
            break
        try:
            y = rk4_step(lambda tt, yy: plant.derivatives(tt, yy, act), t, y, dt)
        except SimulationFault as exc:
            fault, fault_time = str(exc), exc.time
            break

    data = np.array(rows, dtype=float) if rows else np.empty((0, len(TRACE_COLUMNS)))
    columns = {name: data[:, i].copy() for i, name in enumerate(TRACE_COLUMNS)}
    trace = SimTrace(columns, period, fault, fault_time)
    _fill_trajectory_errors(trace, scenario)
    return trace


def _trace_row(t, state, speed, out, act, cut, iesp_out: IespOutput | None, pilot) -> list:
    if iesp_out is not None:
        refs = iesp_out.references
        errs = iesp_out.errors
        iesp_vals = (
            iesp_out.delta_m_yaw_nm,
            refs.beta_ref_rad, refs.psi_dot_ref_radps, refs.psi_dot_limit_radps,
            errs.e_beta_rad, errs.e_psi_dot_radps,
            iesp_out.beta_hat_rad,
        )
    else:
        iesp_vals = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    return [
        t,
        state.x_m, state.y_m, state.yaw_rad, state.pitch_rad, state.roll_rad,
        state.vx_mps, state.vy_mps, state.yaw_rate_radps, speed,
        state.beta_rad,
        act.steer_rad, act.throttle, act.engine_torque_nm, cut,
        *act.brake_torques_nm,
        *iesp_vals,
        *out.sigma,
        *out.loads_n,
        _signed_offset(pilot, state),
        0.0, 0.0,  # trajectory errors filled after the run
    ]


def _signed_offset(pilot, state) -> float:
    pt = pilot.trajectory.eval(pilot._progress)
    tx, ty = math.cos(pt.heading_rad), math.sin(pt.heading_rad)
    return tx * (state.y_m - pt.y_m) - ty * (state.x_m - pt.x_m)


def _fill_trajectory_errors(trace: SimTrace, scenario: Scenario):
    n = len(trace)
    if n == 0:
        return
    traj = scenario.trajectory
    inst = np.empty(n)
    xs = trace["x_m"]
    ys = trace["y_m"]
    for i in range(n):
        inst[i] = traj.distance_to(xs[i], ys[i])
    trace.columns["traj_err_inst_m"] = inst
    trace.columns["traj_err_mean_m"] = np.cumsum(inst) / np.arange(1, n + 1)
