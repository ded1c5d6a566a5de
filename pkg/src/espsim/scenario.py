"""Scenario files: schema, defaults and validation.

A scenario is a YAML mapping with explicit units in the key names.
Every field has a default, so the minimal valid file is an empty
mapping; validation reports all problems at once with their dotted
locations instead of stopping at the first.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .autopilot import Bend, Trajectory
from .stability import IespConfig
from .tyres import WHEEL_NAMES, BurstEvent, DeflatedFrictionModel, InflatedFrictionModel
from .vehicle import VehicleParameters


class ScenarioError(ValueError):
    """Validation failure; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n" + "\n".join(f"  - {e}" for e in self.errors))


_VEHICLE_KEYS = {
    "mass_kg", "wheelbase_m", "gc_to_rear_axle_m", "gc_height_m",
    "front_track_m", "rear_track_m", "wheel_radius_m",
    "inertia_roll_kgm2", "inertia_pitch_kgm2", "inertia_yaw_kgm2",
    "wheel_spin_inertia_kgm2", "spring_rate_npm", "damper_rate_nspm",
    "antiroll_front_npm", "antiroll_rear_npm", "suspension_travel_m",
    "drag_area_m2", "engine_max_torque_nm", "brake_max_torque_nm",
    "steer_limit_rad", "steer_rate_limit_radps", "drive_axle",
}

_TYRE_DEFAULTS = {
    "mu_long_max": 0.9,
    "mu_trasv_max": 0.9,
    "sigma_peak": 0.15,
    "alpha_peak_rad": math.radians(7.0),
    "long_falloff": 0.75,
    "trasv_falloff": 0.40,
    "trasv_fall_width_rad": 0.20,
    "burst_mu_long": 0.05,
    "burst_mu_trasv": 0.05,
    "deflation_duration_s": 3.0,
}

_CONTROLLER_DEFAULTS = {
    "iesp_enabled": True,
    "abs_enabled": True,
    "controller_period_s": 0.01,
    "k_us_s2pm2": IespConfig.k_us_s2pm2,
    "k_ps_s2pm2": IespConfig.k_ps_s2pm2,
    "mu_y_max": IespConfig.mu_y_max,
    "v_floor_mps": IespConfig.v_floor_mps,
    "beta_filter_time_s": IespConfig.beta_filter_time_s,
    "beta_dry_limit_rad": IespConfig.beta_dry_limit_rad,
    "beta_icy_limit_rad": IespConfig.beta_icy_limit_rad,
    "rule_bases": {
        "yaw_moment": "builtin",
        "torque_cut": "builtin",
        "abs_modulator": "builtin",
        "autopilot_steer": "builtin",
    },
}

_PEDAL_DEFAULTS = {
    "brake_schedule": [[0.0, 0.0]],
    "throttle_schedule": None,
    "cruise_hold": True,
}

_SIM_DEFAULTS = {"duration_s": 10.0, "dt_s": 0.001}

_TRAJECTORY_DEFAULTS = {
    "start_x_m": 0.0,
    "start_y_m": 0.0,
    "start_heading_rad": 0.0,
    "bends": [
        {"length_m": 250.0, "curvature_1pm": 0.0},
        {"length_m": 250.0, "curvature_1pm": 0.0},
        {"length_m": 250.0, "curvature_1pm": 0.0},
        {"length_m": 250.0, "curvature_1pm": 0.0},
    ],
}


@dataclass(frozen=True)
class PedalSchedule:
    """Step schedules for the pedals the autopilot does not control."""

    brake_steps: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    throttle_steps: tuple[tuple[float, float], ...] | None = None
    cruise_hold: bool = True

    def brake(self, t: float) -> float:
        return _step_value(self.brake_steps, t)

    def throttle(self, t: float) -> float:
        if self.throttle_steps is None:
            return 0.0
        return _step_value(self.throttle_steps, t)


def _step_value(steps, t: float) -> float:
    value = 0.0
    for time, v in steps:
        if t >= time:
            value = v
        else:
            break
    return value


@dataclass(frozen=True)
class Scenario:
    """Fully validated simulation setup."""

    description: str
    vehicle: VehicleParameters
    inflated: InflatedFrictionModel
    deflated: DeflatedFrictionModel
    trajectory: Trajectory
    initial_speed_kmh: float
    burst: BurstEvent | None
    iesp_enabled: bool
    abs_enabled: bool
    controller_period_s: float
    iesp_config: IespConfig
    rule_bases: dict
    pedals: PedalSchedule
    duration_s: float
    dt_s: float
    raw: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def initial_speed_mps(self) -> float:
        return self.initial_speed_kmh / 3.6


def _merge_defaults(doc: dict, defaults: dict) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in doc.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge_defaults(v, out[k])
        else:
            out[k] = copy.deepcopy(v)
    return out


def _check_number(errors, where, value, *, minimum=None, maximum=None,
                  exclusive_min=None) -> float | None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{where}: expected a number, got {value!r}")
        return None
    v = float(value)
    if not math.isfinite(v):
        errors.append(f"{where}: must be finite")
        return None
    if exclusive_min is not None and v <= exclusive_min:
        errors.append(f"{where}: must be > {exclusive_min}, got {v}")
        return None
    if minimum is not None and v < minimum:
        errors.append(f"{where}: must be >= {minimum}, got {v}")
        return None
    if maximum is not None and v > maximum:
        errors.append(f"{where}: must be <= {maximum}, got {v}")
        return None
    return v


def _check_unknown(errors, where, doc: dict, allowed):
    for key in doc:
        if key not in allowed:
            errors.append(f"{where}.{key}: unknown key")


def _parse_schedule(errors, where, raw):
    if raw is None:
        return None
    if not isinstance(raw, list):
        errors.append(f"{where}: expected a list of [time_s, value] pairs")
        return None
    steps = []
    prev_t = -math.inf
    for i, entry in enumerate(raw):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            errors.append(f"{where}[{i}]: expected [time_s, value]")
            continue
        t = _check_number(errors, f"{where}[{i}].time_s", entry[0], minimum=0.0)
        v = _check_number(errors, f"{where}[{i}].value", entry[1], minimum=0.0, maximum=1.0)
        if t is None or v is None:
            continue
        if t <= prev_t:
            errors.append(f"{where}[{i}]: times must be strictly increasing")
        prev_t = t
        steps.append((t, v))
    return tuple(steps)


def scenario_from_dict(doc: dict) -> Scenario:
    """Validate a raw mapping and build the Scenario, reporting every
    problem found with its dotted location."""
    errors: list[str] = []
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ScenarioError(["scenario document must be a mapping"])

    top_allowed = {"description", "vehicle", "tyres", "trajectory",
                   "initial_speed_kmh", "burst", "controllers", "pedals", "sim"}
    _check_unknown(errors, "scenario", doc, top_allowed)

    # vehicle
    veh_doc = doc.get("vehicle") or {}
    vehicle = None
    if not isinstance(veh_doc, dict):
        errors.append("vehicle: expected a mapping")
    else:
        _check_unknown(errors, "vehicle", veh_doc, _VEHICLE_KEYS)
        try:
            vehicle = VehicleParameters(**{k: v for k, v in veh_doc.items() if k in _VEHICLE_KEYS})
        except (TypeError, ValueError) as exc:
            errors.append(f"vehicle: {exc}")

    # tyres
    tyre_doc = doc.get("tyres") or {}
    inflated = deflated = None
    deflation = None
    if not isinstance(tyre_doc, dict):
        errors.append("tyres: expected a mapping")
    else:
        _check_unknown(errors, "tyres", tyre_doc, set(_TYRE_DEFAULTS))
        t = _merge_defaults(tyre_doc, _TYRE_DEFAULTS)
        try:
            inflated = InflatedFrictionModel(
                mu_long_max=t["mu_long_max"], mu_trasv_max=t["mu_trasv_max"],
                sigma_peak=t["sigma_peak"], alpha_peak_rad=t["alpha_peak_rad"],
                long_falloff=t["long_falloff"], trasv_falloff=t["trasv_falloff"],
                trasv_fall_width_rad=t["trasv_fall_width_rad"],
            )
            deflated = DeflatedFrictionModel(t["burst_mu_long"], t["burst_mu_trasv"])
        except (TypeError, ValueError) as exc:
            errors.append(f"tyres: {exc}")
        deflation = _check_number(errors, "tyres.deflation_duration_s",
                                  t["deflation_duration_s"], exclusive_min=0.0)

    # trajectory
    traj_doc = doc.get("trajectory") or {}
    trajectory = None
    if not isinstance(traj_doc, dict):
        errors.append("trajectory: expected a mapping")
    else:
        _check_unknown(errors, "trajectory", traj_doc, set(_TRAJECTORY_DEFAULTS))
        tr = _merge_defaults(traj_doc, _TRAJECTORY_DEFAULTS)
        bends_raw = tr["bends"]
        bends = []
        if not isinstance(bends_raw, list) or len(bends_raw) != 4:
            errors.append(
                f"trajectory.bends: a trajectory is exactly four bends, got "
                f"{len(bends_raw) if isinstance(bends_raw, list) else type(bends_raw).__name__}"
            )
        else:
            for i, b in enumerate(bends_raw):
                if not isinstance(b, dict) or set(b) - {"length_m", "curvature_1pm"}:
                    errors.append(f"trajectory.bends[{i}]: expected length_m and curvature_1pm")
                    continue
                try:
                    bends.append(Bend(float(b.get("length_m", 0.0)),
                                      float(b.get("curvature_1pm", 0.0))))
                except (TypeError, ValueError) as exc:
                    errors.append(f"trajectory.bends[{i}]: {exc}")
        if len(bends) == 4:
            trajectory = Trajectory(
                bends, tr["start_x_m"], tr["start_y_m"], tr["start_heading_rad"]
            )

    speed = _check_number(errors, "initial_speed_kmh", doc.get("initial_speed_kmh", 100.0),
                          minimum=0.0)

    # sim block (needed before burst validation)
    sim_doc = doc.get("sim") or {}
    duration = dt = None
    if not isinstance(sim_doc, dict):
        errors.append("sim: expected a mapping")
    else:
        _check_unknown(errors, "sim", sim_doc, set(_SIM_DEFAULTS))
        s = _merge_defaults(sim_doc, _SIM_DEFAULTS)
        duration = _check_number(errors, "sim.duration_s", s["duration_s"], exclusive_min=0.0)
        dt = _check_number(errors, "sim.dt_s", s["dt_s"], exclusive_min=0.0)

    # burst
    burst_doc = doc.get("burst")
    burst = None
    if burst_doc is not None:
        if not isinstance(burst_doc, dict):
            errors.append("burst: expected a mapping or null")
        else:
            _check_unknown(errors, "burst", burst_doc, {"wheel", "time_s"})
            wheel = burst_doc.get("wheel", "rear_right")
            if wheel not in WHEEL_NAMES:
                errors.append(f"burst.wheel: unknown wheel '{wheel}', expected one of {WHEEL_NAMES}")
                wheel = None
            t_burst = _check_number(errors, "burst.time_s", burst_doc.get("time_s", 0.0),
                                    minimum=0.0)
            if t_burst is not None and duration is not None and t_burst >= duration:
                errors.append(
                    f"burst.time_s: burst time ({t_burst} s) must be below "
                    f"sim.duration_s ({duration} s)"
                )
            if wheel is not None and t_burst is not None and deflated is not None:
                burst = BurstEvent(wheel, t_burst, duration=deflation or 3.0, model=deflated)

    # controllers
    ctrl_doc = doc.get("controllers") or {}
    iesp_enabled = abs_enabled = True
    period = 0.01
    iesp_cfg = IespConfig()
    rule_bases = dict(_CONTROLLER_DEFAULTS["rule_bases"])
    if not isinstance(ctrl_doc, dict):
        errors.append("controllers: expected a mapping")
    else:
        _check_unknown(errors, "controllers", ctrl_doc, set(_CONTROLLER_DEFAULTS))
        c = _merge_defaults(ctrl_doc, _CONTROLLER_DEFAULTS)
        iesp_enabled = bool(c["iesp_enabled"])
        abs_enabled = bool(c["abs_enabled"])
        period = _check_number(errors, "controllers.controller_period_s",
                               c["controller_period_s"], exclusive_min=0.0)
        if not isinstance(c["rule_bases"], dict):
            errors.append("controllers.rule_bases: expected a mapping")
        else:
            _check_unknown(errors, "controllers.rule_bases", c["rule_bases"],
                           set(rule_bases))
            rule_bases.update(c["rule_bases"])
        try:
            iesp_cfg = IespConfig(
                k_us_s2pm2=c["k_us_s2pm2"], k_ps_s2pm2=c["k_ps_s2pm2"],
                mu_y_max=c["mu_y_max"], v_floor_mps=c["v_floor_mps"],
                beta_filter_time_s=c["beta_filter_time_s"],
                beta_dry_limit_rad=c["beta_dry_limit_rad"],
                beta_icy_limit_rad=c["beta_icy_limit_rad"],
            )
        except (TypeError, ValueError) as exc:
            errors.append(f"controllers: {exc}")

    if period is not None and dt is not None:
        ratio = period / dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            errors.append(
                f"controllers.controller_period_s: must be an integer multiple "
                f"of sim.dt_s (got {period}/{dt})"
            )

    # pedals
    ped_doc = doc.get("pedals") or {}
    pedals = PedalSchedule()
    if not isinstance(ped_doc, dict):
        errors.append("pedals: expected a mapping")
    else:
        _check_unknown(errors, "pedals", ped_doc, set(_PEDAL_DEFAULTS))
        p = _merge_defaults(ped_doc, _PEDAL_DEFAULTS)
        brake = _parse_schedule(errors, "pedals.brake_schedule", p["brake_schedule"])
        throttle = _parse_schedule(errors, "pedals.throttle_schedule", p["throttle_schedule"])
        pedals = PedalSchedule(
            brake_steps=brake if brake else ((0.0, 0.0),),
            throttle_steps=throttle,
            cruise_hold=bool(p["cruise_hold"]),
        )

    if errors:
        raise ScenarioError(errors)

    return Scenario(
        description=str(doc.get("description", "")),
        vehicle=vehicle,
        inflated=inflated,
        deflated=deflated,
        trajectory=trajectory,
        initial_speed_kmh=speed,
        burst=burst,
        iesp_enabled=iesp_enabled,
        abs_enabled=abs_enabled,
        controller_period_s=period,
        iesp_config=iesp_cfg,
        rule_bases=rule_bases,
        pedals=pedals,
        duration_s=duration,
        dt_s=dt,
        raw=copy.deepcopy(doc),
    )


def load_scenario(path) -> Scenario:
    """Load and validate a scenario YAML file."""
    text = Path(path).read_text()
    doc = yaml.safe_load(text)
    return scenario_from_dict(doc)


def apply_overrides(doc: dict, overrides: dict) -> dict:
    """Return a copy of a raw scenario mapping with dotted-path
    overrides applied (used by sweeps and CLI toggles)."""
    out = copy.deepcopy(doc) if doc else {}
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = out
        for key in parts[:-1]:
            nxt = node.get(key)
            if not isinstance(nxt, dict):
                nxt = {}
                node[key] = nxt
            node = nxt
        node[parts[-1]] = value
    return out
