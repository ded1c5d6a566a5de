"""Driver replacement: tracks a four-bend trajectory by summing a
kinematic feedforward steering angle with a fuzzy feedback correction.

Sign conventions: curvature and steering are left-positive; the lateral
offset is positive when the vehicle is left of the path, so a positive
offset demands a negative (rightward) correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .fuzzy import FuzzyRuleBase, builtin_rule_base
from .vehicle import VehicleParameters


def _wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


@dataclass(frozen=True)
class Bend:
    """One parametric bend: arc length and signed curvature (0 = straight)."""

    length_m: float
    curvature_1pm: float

    def __post_init__(self):
        if self.length_m <= 0.0:
            raise ValueError("bend length must be > 0")
        if abs(self.curvature_1pm) > 0.2:
            raise ValueError("curvature beyond 0.2 1/m is out of the model's envelope")


@dataclass(frozen=True)
class TrajectoryPoint:
    x_m: float
    y_m: float
    heading_rad: float
    curvature_1pm: float
    end_of_course: bool = False

    @property
    def radius_m(self) -> float:
        """Signed curvature radius; +-inf on a straight."""
        if self.curvature_1pm == 0.0:
            return math.inf
        return 1.0 / self.curvature_1pm


class Trajectory:
    """Sequence of exactly four G1-continuous parametric bends."""

    def __init__(self, bends, start_x=0.0, start_y=0.0, start_heading=0.0):
        bends = tuple(bends)
        if len(bends) != 4:
            raise ValueError(f"a trajectory is exactly four bends, got {len(bends)}")
        self.bends = bends
        # entry pose of each segment
        self._entries = []
        x, y, h = float(start_x), float(start_y), float(start_heading)
        s = 0.0
        for bend in bends:
            self._entries.append((s, x, y, h))
            x, y, h = self._advance(x, y, h, bend.curvature_1pm, bend.length_m)
            s += bend.length_m
        self.total_length_m = s
        self._end_pose = (x, y, h)

    @staticmethod
    def _advance(x, y, h, kappa, ds):
        if kappa == 0.0:
            return x + ds * math.cos(h), y + ds * math.sin(h), h
        r = 1.0 / kappa
        h2 = h + ds * kappa
        return (
            x + r * (math.sin(h2) - math.sin(h)),
            y - r * (math.cos(h2) - math.cos(h)),
            h2,
        )

    def eval(self, s: float) -> TrajectoryPoint:
        """Pose and curvature at arc length s; s is clamped to the course
        with the end flag raised when it falls outside."""
        clamped = min(max(s, 0.0), self.total_length_m)
        out_of_range = clamped != s
        idx = len(self.bends) - 1
        for i, (s0, *_rest) in enumerate(self._entries):
            if clamped < s0:
                idx = i - 1
                break
        s0, x0, y0, h0 = self._entries[idx]
        bend = self.bends[idx]
        ds = clamped - s0
        x, y, h = self._advance(x0, y0, h0, bend.curvature_1pm, ds)
        end = out_of_range or clamped >= self.total_length_m
        return TrajectoryPoint(x, y, h, bend.curvature_1pm, end)

    def _segment_nearest(self, idx: int, px: float, py: float):
        """Nearest (s, distance) on segment idx to the point (px, py)."""
        s0, x0, y0, h0 = self._entries[idx]
        bend = self.bends[idx]
        L = bend.length_m
        kappa = bend.curvature_1pm
        if kappa == 0.0:
            tx, ty = math.cos(h0), math.sin(h0)
            u = (px - x0) * tx + (py - y0) * ty
            u = min(max(u, 0.0), L)
            qx, qy = x0 + u * tx, y0 + u * ty
            return s0 + u, math.hypot(px - qx, py - qy)
        r = 1.0 / kappa
        cx = x0 - math.sin(h0) * r
        cy = y0 + math.cos(h0) * r
        phi0 = math.atan2(y0 - cy, x0 - cx)
        phi_p = math.atan2(py - cy, px - cx)
        theta = _wrap_angle(phi_p - phi0)
        best = None
        for u in (theta / kappa, 0.0, L):
            u = min(max(u, 0.0), L)
            phi = phi0 + u * kappa
            qx = cx + abs(r) * math.cos(phi)
            qy = cy + abs(r) * math.sin(phi)
            d = math.hypot(px - qx, py - qy)
            if best is None or d < best[1]:
                best = (s0 + u, d)
        return best

    def nearest(self, px: float, py: float, s_min: float = 0.0):
        """Globally nearest (s, distance) with progress not below s_min."""
        best = None
        for idx in range(len(self.bends)):
            s, d = self._segment_nearest(idx, px, py)
            if s < s_min:
                s = s_min
                pt = self.eval(s)
                d = math.hypot(px - pt.x_m, py - pt.y_m)
            if best is None or d < best[1]:
                best = (s, d)
        return best

    def distance_to(self, px: float, py: float) -> float:
        """Unconstrained nearest distance from a point to the course."""
        return min(self._segment_nearest(i, px, py)[1] for i in range(len(self.bends)))


def trajectory_eval(traj: Trajectory, s: float) -> TrajectoryPoint:
    return traj.eval(s)


def kinematic_steer(params: VehicleParameters, radius_m: float) -> float:
    """Feedforward steering angle arctan(wheelbase / radius), carrying the
    sign of the bend; a straight (infinite radius) gives zero."""
    if radius_m == 0.0:
        raise ValueError("curvature radius must be nonzero")
    return math.atan(params.wheelbase_m / radius_m)


@dataclass(frozen=True)
class TrackingError:
    """Signed lateral offset (left-positive), heading error and progress."""

    offset_m: float
    heading_err_rad: float
    progress_m: float


class Autopilot:
    """Parallel kinematic + fuzzy steering controller with monotone
    progress tracking along the required trajectory."""

    #: Feedback attenuation speed [m/s]: corrections scale as 1/(1+(V/V_REF)^2).
    V_REF = 25.0
    #: Yaw-rate damping gain on (yaw rate - path yaw rate).
    K_DAMP = 0.35
    #: Saturation of the fuzzy correction [rad] before the total clamp.
    CORRECTION_LIMIT = 0.4

    def __init__(self, trajectory: Trajectory, params: VehicleParameters,
                 rulebase: FuzzyRuleBase | None = None):
        self.trajectory = trajectory
        self.params = params
        self.rulebase = rulebase if rulebase is not None else builtin_rule_base("autopilot_steer")
        self._progress = 0.0
        self._last_steer = 0.0
        self.end_of_course = False

    def tracking_error(self, x: float, y: float, yaw: float) -> TrackingError:
        s, _dist = self.trajectory.nearest(x, y, s_min=self._progress - 2.0)
        s = max(s, self._progress)
        self._progress = s
        pt = self.trajectory.eval(s)
        tx, ty = math.cos(pt.heading_rad), math.sin(pt.heading_rad)
        offset = tx * (y - pt.y_m) - ty * (x - pt.x_m)
        heading_err = _wrap_angle(yaw - pt.heading_rad)
        if pt.end_of_course or s >= self.trajectory.total_length_m:
            self.end_of_course = True
        return TrackingError(offset, heading_err, s)

    def fuzzy_correction(self, err: TrackingError, yaw_rate: float, speed: float) -> float:
        """Feedback steering correction, attenuated with speed and damped
        against the yaw rate the path itself requires."""
        scale = 1.0 / (1.0 + (speed / self.V_REF) ** 2)
        raw = self.rulebase.evaluate(err.offset_m, err.heading_err_rad).value
        kappa = self.trajectory.eval(err.progress_m).curvature_1pm
        damp = self.K_DAMP * (yaw_rate - speed * kappa)
        corr = (raw - damp) * scale
        lim = self.CORRECTION_LIMIT
        return min(max(corr, -lim), lim)

    def pilot_command(self, x: float, y: float, yaw: float, yaw_rate: float,
                      speed: float, dt: float) -> float:
        """Steering command for this tick: feedforward + fuzzy feedback,
        clamped to the steering limit and the actuator rate limit."""
        if self.end_of_course:
            return self._last_steer
        err = self.tracking_error(x, y, yaw)
        pt = self.trajectory.eval(err.progress_m)
        steer = kinematic_steer(self.params, pt.radius_m)
        steer += self.fuzzy_correction(err, yaw_rate, speed)
        lim = self.params.steer_limit_rad
        steer = min(max(steer, -lim), lim)
        max_move = self.params.steer_rate_limit_radps * dt
        steer = min(max(steer, self._last_steer - max_move), self._last_steer + max_move)
        self._last_steer = steer
        return steer
