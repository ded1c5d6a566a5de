"""Stability program: reference responses from the steady-state
single-track model, slip-angle estimation, the two fuzzy controllers
(corrective yaw moment, engine torque cut) and the yaw-moment dispenser
that turns the moment into per-wheel brake deltas.

Sign conventions: slip angle, yaw rate and their errors are body-frame
z-up (counter-clockwise positive).  The corrective yaw moment uses the
dispenser's brake-side convention instead: positive moment means "brake
the right-hand side", i.e. a clockwise (rightward) correction.  The
shipped rule table maps between the two, which is why its output
opposes the slip-angle error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .fuzzy import FuzzyRuleBase, builtin_rule_base
from .vehicle import G, VehicleParameters


def reference_yaw_rate(steer: float, speed: float, wheelbase: float, k_us: float) -> float:
    """Ideal yaw rate of the understeer-biased single-track model,
    tan(delta) * V / (l * (1 + k_us * V^2)); k_us = 0 recovers the purely
    kinematic value."""
    return math.tan(steer) * speed / (wheelbase * (1.0 + k_us * speed * speed))


def reference_slip_angle(
    steer: float,
    speed: float,
    wheelbase: float,
    gc_to_rear: float,
    k_us: float,
    k_ps: float,
) -> float:
    """Ideal slip angle tan(delta)/(l*(1+k_us*V^2)) * (b - k_ps*V^2); the
    k_ps term stands in for the rear axle's derive angle, which grows
    with speed."""
    return (
        math.tan(steer)
        / (wheelbase * (1.0 + k_us * speed * speed))
        * (gc_to_rear - k_ps * speed * speed)
    )


def yaw_rate_limit(mu_y_max: float, speed: float, v_floor: float = 1.0) -> float:
    """Adherence-limited yaw rate mu*g/V (nonnegative), floored in speed
    to avoid the standstill singularity."""
    if mu_y_max <= 0.0:
        raise ValueError("mu_y_max must be > 0")
    return mu_y_max * G / max(speed, v_floor)


@dataclass(frozen=True)
class ReferenceState:
    psi_dot_ref_radps: float
    beta_ref_rad: float
    psi_dot_limit_radps: float


@dataclass(frozen=True)
class StabilityErrors:
    e_beta_rad: float
    e_psi_dot_radps: float
    limit_excess_radps: float


def compute_errors(
    beta_hat: float,
    beta_ref: float,
    yaw_rate: float,
    yaw_rate_ref: float,
    yaw_rate_lim: float,
) -> StabilityErrors:
    """Controller inputs: slip-angle error, yaw-rate error against the
    lower of reference and adherence limit, and the adherence excess.

    The min against the nonnegative limit is taken on magnitudes with
    the reference's sign restored, so a right-turn reference is never
    "limited" to a left-turn value.
    """
    target = math.copysign(min(abs(yaw_rate_ref), yaw_rate_lim), yaw_rate_ref)
    return StabilityErrors(
        e_beta_rad=beta_hat - beta_ref,
        e_psi_dot_radps=yaw_rate - target,
        limit_excess_radps=abs(yaw_rate_ref) - yaw_rate_lim,
    )


class SlipAngleEstimator:
    """Virtual slip-angle sensor: integrates beta_dot = a_lat/V - psi_dot
    with an exponential leak toward the kinematic single-track value.
    Below the speed floor the estimate is held and flagged invalid."""

    def __init__(self, time_constant_s: float = 0.3, v_floor: float = 1.0):
        if time_constant_s <= 0.0:
            raise ValueError("time constant must be > 0")
        self.tau = time_constant_s
        self.v_floor = v_floor
        self.beta_hat = 0.0
        self.valid = True

    def reset(self, beta: float = 0.0):
        self.beta_hat = beta
        self.valid = True

    def update(self, a_lat: float, yaw_rate: float, speed: float,
               beta_kin: float, dt: float) -> float:
        if dt <= 0.0:
            raise ValueError("dt must be > 0")
        if speed < self.v_floor:
            self.valid = False
            return self.beta_hat
        self.valid = True
        rate = a_lat / speed - yaw_rate + (beta_kin - self.beta_hat) / self.tau
        self.beta_hat += rate * dt
        return self.beta_hat


@dataclass(frozen=True)
class DispenseResult:
    """Axle split and realizable per-wheel brake deltas for one yaw
    moment request.

    ``m_front + m_rear`` equals the request exactly (the load fractions
    sum to one).  The front moment goes to a single wheel chosen by
    sign; the rear moment is meant as an opposite-sign pair, but brakes
    cannot pull, so the negative side is dropped and the positive side
    doubled to preserve the net moment about the GC.
    """

    m_front_nm: float
    m_rear_nm: float
    front_wheel: int                 # 1 = front_right for a positive moment
    deltas_nm: tuple[float, float, float, float]
    rear_pair_nm: float              # intended +- magnitude before the drop
    negative_dropped: bool
    fault: bool = False


def dispense(
    delta_m_yaw: float,
    loads_n,
    wheel_radius: float,
    front_track: float,
    rear_track: float,
) -> DispenseResult:
    """Split a corrective yaw moment between the axles in proportion to
    their vertical load and convert each share to brake torque through
    the half-track lever arm (delta = 2 r_w / c_half * M).

    Positive moments brake the right-hand side (front-right single
    wheel, rear-right of the pair); negative moments mirror to the left.
    """
    total = sum(loads_n)
    if total <= 0.0:
        return DispenseResult(0.0, 0.0, 0, (0.0, 0.0, 0.0, 0.0), 0.0, False, fault=True)
    m_front = (loads_n[0] + loads_n[1]) / total * delta_m_yaw
    m_rear = (loads_n[2] + loads_n[3]) / total * delta_m_yaw
    deltas = [0.0, 0.0, 0.0, 0.0]
    front_delta = 2.0 * wheel_radius / (0.5 * front_track) * abs(m_front)
    front_wheel = 1 if m_front >= 0.0 else 0
    deltas[front_wheel] = front_delta
    rear_pair = 2.0 * wheel_radius / (0.5 * rear_track) * abs(m_rear)
    dropped = False
    if m_rear > 0.0:
        deltas[3] = 2.0 * rear_pair
        dropped = True
    elif m_rear < 0.0:
        deltas[2] = 2.0 * rear_pair
        dropped = True
    return DispenseResult(
        m_front, m_rear, front_wheel, tuple(deltas), rear_pair, dropped
    )


@dataclass(frozen=True)
class IespConfig:
    """Tuning of the stability program; values are artifact calibration,
    chosen so the reference car is mildly understeering at speed."""

    k_us_s2pm2: float = 0.0005
    k_ps_s2pm2: float = 0.007
    mu_y_max: float = 0.9
    v_floor_mps: float = 1.0
    beta_filter_time_s: float = 0.3
    beta_dry_limit_rad: float = math.radians(12.0)
    beta_icy_limit_rad: float = math.radians(2.0)


@dataclass(frozen=True)
class IespOutput:
    """One controller tick's worth of stability actuation and diagnostics."""

    delta_m_yaw_nm: float
    torque_cut_percent: float
    brake_deltas_nm: tuple[float, float, float, float]
    references: ReferenceState
    errors: StabilityErrors
    beta_hat_rad: float
    beta_estimate_valid: bool
    beta_over_dry_limit: bool
    beta_over_icy_limit: bool


class StabilityController:
    """Reference model + estimator + the two fuzzy controllers +
    dispenser, ticked at the controller rate."""

    def __init__(
        self,
        params: VehicleParameters,
        config: IespConfig | None = None,
        yaw_rulebase: FuzzyRuleBase | None = None,
        cut_rulebase: FuzzyRuleBase | None = None,
    ):
        self.params = params
        self.config = config if config is not None else IespConfig()
        self.yaw_rulebase = yaw_rulebase if yaw_rulebase is not None else builtin_rule_base("yaw_moment")
        self.cut_rulebase = cut_rulebase if cut_rulebase is not None else builtin_rule_base("torque_cut")
        self.estimator = SlipAngleEstimator(
            self.config.beta_filter_time_s, self.config.v_floor_mps
        )

    def references(self, steer: float, speed: float) -> ReferenceState:
        cfg = self.config
        p = self.params
        return ReferenceState(
            psi_dot_ref_radps=reference_yaw_rate(steer, speed, p.wheelbase_m, cfg.k_us_s2pm2),
            beta_ref_rad=reference_slip_angle(
                steer, speed, p.wheelbase_m, p.gc_to_rear_axle_m,
                cfg.k_us_s2pm2, cfg.k_ps_s2pm2,
            ),
            psi_dot_limit_radps=yaw_rate_limit(cfg.mu_y_max, speed, cfg.v_floor_mps),
        )

    def corrective_yaw_moment(self, e_beta: float, e_psi_dot: float) -> float:
        return self.yaw_rulebase.evaluate(e_beta, e_psi_dot).value

    def torque_cut(self, limit_excess: float) -> float:
        cut = self.cut_rulebase.evaluate(limit_excess).value
        return min(max(cut, 0.0), 100.0)

    def tick(
        self,
        steer: float,
        speed: float,
        yaw_rate: float,
        a_lat: float,
        loads_n,
        dt: float,
    ) -> IespOutput:
        refs = self.references(steer, speed)
        beta_hat = self.estimator.update(a_lat, yaw_rate, speed, refs.beta_ref_rad, dt)
        errors = compute_errors(
            beta_hat, refs.beta_ref_rad, yaw_rate,
            refs.psi_dot_ref_radps, refs.psi_dot_limit_radps,
        )
        delta_m = self.corrective_yaw_moment(errors.e_beta_rad, errors.e_psi_dot_radps)
        cut = self.torque_cut(errors.limit_excess_radps)
        dispensed = dispense(
            delta_m, loads_n, self.params.wheel_radius_m,
            self.params.front_track_m, self.params.rear_track_m,
        )
        return IespOutput(
            delta_m_yaw_nm=delta_m,
            torque_cut_percent=cut,
            brake_deltas_nm=dispensed.deltas_nm,
            references=refs,
            errors=errors,
            beta_hat_rad=beta_hat,
            beta_estimate_valid=self.estimator.valid,
            beta_over_dry_limit=abs(beta_hat) > self.config.beta_dry_limit_rad,
            beta_over_icy_limit=abs(beta_hat) > self.config.beta_icy_limit_rad,
        )
