"""Lumped-mass car model: 6-DOF rigid body plus per-wheel rotation, with
corner spring-damper suspension feeding the vertical loads.

Frames: ground X/Y in the road plane, Z up.  Body x forward, y left,
z up; yaw/pitch/roll are ZYX Euler angles (yaw counter-clockwise
positive seen from above).  Wheel order everywhere is
(front_left, front_right, rear_left, rear_right).

Wheel assemblies are massless and the tyres are rigid, so the
suspension deflection is slaved to the body kinematics: the contact
load at each corner is static share + spring * compression +
damper * compression rate (clamped at zero for wheel lift), and the
deflection itself is a derived quantity, not an integrated state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tyres import (
    BurstEvent,
    DeflatedFrictionModel,
    InflatedFrictionModel,
    TyreContactState,
    compute_slip,
    inflation_blend,
    tyre_force_parts,
)

G = 9.81          # gravitational acceleration [m/s^2]
RHO_AIR = 1.225   # air density [kg/m^3]

# State vector layout (16 entries)
IDX_X, IDX_Y, IDX_Z = 0, 1, 2
IDX_YAW, IDX_PITCH, IDX_ROLL = 3, 4, 5
IDX_VX, IDX_VY, IDX_VZ = 6, 7, 8
IDX_WX, IDX_WY, IDX_WZ = 9, 10, 11
IDX_SPIN = 12  # four wheel spins follow
N_STATES = 16

#: End-stop spring multiplier once the suspension travel limit is exceeded.
END_STOP_FACTOR = 8.0

#: Pitch guard: the Euler kinematics degenerate at +-pi/2; in-scope
#: scenarios never approach this, so treat it as a fault.
PITCH_GUARD = 1.2


class SimulationFault(RuntimeError):
    """Non-finite state or kinematic breakdown during integration."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:.4f} s")
        self.time = time


@dataclass(frozen=True)
class VehicleParameters:
    """Geometry, inertias and load limits of the car.

    ``front_track_m``/``rear_track_m`` store the full axle widths; the
    yaw-moment dispenser halves them where its lever arms need the
    half-width.
    """

    mass_kg: float = 1500.0
    wheelbase_m: float = 2.6
    gc_to_rear_axle_m: float = 1.3
    gc_height_m: float = 0.55
    front_track_m: float = 1.5
    rear_track_m: float = 1.5
    wheel_radius_m: float = 0.30
    inertia_roll_kgm2: float = 600.0
    inertia_pitch_kgm2: float = 2200.0
    inertia_yaw_kgm2: float = 2500.0
    wheel_spin_inertia_kgm2: float = 1.2
    spring_rate_npm: float = 21000.0
    damper_rate_nspm: float = 3800.0
    antiroll_front_npm: float = 15000.0
    antiroll_rear_npm: float = 6000.0
    suspension_travel_m: float = 0.12
    drag_area_m2: float = 0.68
    engine_max_torque_nm: float = 2500.0
    brake_max_torque_nm: float = 1500.0
    steer_limit_rad: float = 0.6
    steer_rate_limit_radps: float = 0.8
    drive_axle: str = "front"

    def __post_init__(self):
        positive = (
            self.mass_kg, self.wheelbase_m, self.gc_to_rear_axle_m, self.gc_height_m,
            self.front_track_m, self.rear_track_m, self.wheel_radius_m,
            self.inertia_roll_kgm2, self.inertia_pitch_kgm2, self.inertia_yaw_kgm2,
            self.wheel_spin_inertia_kgm2, self.spring_rate_npm, self.damper_rate_nspm,
            self.suspension_travel_m, self.engine_max_torque_nm,
            self.brake_max_torque_nm, self.steer_limit_rad, self.steer_rate_limit_radps,
        )
        if any(v <= 0.0 for v in positive):
            raise ValueError("vehicle parameters must be strictly positive")
        if not 0.0 < self.gc_to_rear_axle_m < self.wheelbase_m:
            raise ValueError("need 0 < gc_to_rear_axle < wheelbase")
        if self.drive_axle not in ("front", "rear"):
            raise ValueError("drive_axle must be 'front' or 'rear'")

    @property
    def gc_to_front_axle_m(self) -> float:
        return self.wheelbase_m - self.gc_to_rear_axle_m

    @property
    def wheel_offsets(self) -> tuple[tuple[float, float], ...]:
        """Body-frame (x, y) of each wheel, order FL, FR, RL, RR."""
        a = self.gc_to_front_axle_m
        b = self.gc_to_rear_axle_m
        hf = 0.5 * self.front_track_m
        hr = 0.5 * self.rear_track_m
        return ((a, hf), (a, -hf), (-b, hr), (-b, -hr))

    @property
    def static_loads_n(self) -> tuple[float, float, float, float]:
        w = self.mass_kg * G
        front = w * self.gc_to_rear_axle_m / self.wheelbase_m / 2.0
        rear = w * self.gc_to_front_axle_m / self.wheelbase_m / 2.0
        return (front, front, rear, rear)

    @property
    def roll_stiffness_front_nmprad(self) -> float:
        t = self.front_track_m
        return self.spring_rate_npm * t * t / 2.0 + self.antiroll_front_npm * t * t

    @property
    def roll_stiffness_rear_nmprad(self) -> float:
        t = self.rear_track_m
        return self.spring_rate_npm * t * t / 2.0 + self.antiroll_rear_npm * t * t


@dataclass(frozen=True)
class VehicleState:
    """Full dynamic state.  Velocities and rates are body-frame."""

    x_m: float = 0.0
    y_m: float = 0.0
    z_m: float = 0.0
    yaw_rad: float = 0.0
    pitch_rad: float = 0.0
    roll_rad: float = 0.0
    vx_mps: float = 0.0
    vy_mps: float = 0.0
    vz_mps: float = 0.0
    roll_rate_radps: float = 0.0
    pitch_rate_radps: float = 0.0
    yaw_rate_radps: float = 0.0
    wheel_spin_radps: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, y) -> "VehicleState":
        return cls(
            x_m=y[IDX_X], y_m=y[IDX_Y], z_m=y[IDX_Z],
            yaw_rad=y[IDX_YAW], pitch_rad=y[IDX_PITCH], roll_rad=y[IDX_ROLL],
            vx_mps=y[IDX_VX], vy_mps=y[IDX_VY], vz_mps=y[IDX_VZ],
            roll_rate_radps=y[IDX_WX], pitch_rate_radps=y[IDX_WY],
            yaw_rate_radps=y[IDX_WZ],
            wheel_spin_radps=tuple(y[IDX_SPIN:IDX_SPIN + 4]),
        )

    def to_array(self) -> np.ndarray:
        return np.array(
            [self.x_m, self.y_m, self.z_m,
             self.yaw_rad, self.pitch_rad, self.roll_rad,
             self.vx_mps, self.vy_mps, self.vz_mps,
             self.roll_rate_radps, self.pitch_rate_radps, self.yaw_rate_radps,
             *self.wheel_spin_radps],
            dtype=float,
        )

    @property
    def beta_rad(self) -> float:
        """Slip angle: angle between GC velocity and the body x axis."""
        return math.atan2(self.vy_mps, self.vx_mps) if (self.vx_mps or self.vy_mps) else 0.0

    def suspension_deflections(self, params: VehicleParameters):
        """Kinematic per-corner (compression, compression rate) [m, m/s],
        clamped to the travel limit.  Positive = compressed beyond the
        static ride height."""
        comp, rate = _suspension_kinematics(self.to_array(), params)
        travel = params.suspension_travel_m
        return tuple(max(-travel, min(travel, c)) for c in comp), tuple(rate)


@dataclass(frozen=True)
class ActuationSet:
    """Driver/controller commands applied to the plant."""

    steer_rad: float = 0.0
    throttle: float = 0.0
    brake_torques_nm: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    engine_torque_nm: float = 0.0  # total at the driven axle, after any cut

    def __post_init__(self):
        if any(t < 0.0 for t in self.brake_torques_nm):
            raise ValueError("brake torques must be >= 0")
        if not 0.0 <= self.throttle <= 1.0:
            raise ValueError("throttle must lie in [0, 1]")


def vertical_loads(params: VehicleParameters, a_long: float, a_trasv: float) -> np.ndarray:
    """Per-wheel vertical loads from measured GC accelerations [N].

    This is the controllers' instantaneous load model (the plant derives
    its loads from the suspension instead).  Sign conventions, which the
    formulas require but do not state: ``a_long`` is deceleration-positive
    (braking shifts load to the front pair) and ``a_trasv`` is positive to
    the right (a right turn's centripetal acceleration loads the left
    wheels).  The longitudinal and roll transfer terms enter the four
    wheels with opposite signs, so the sum is always m*g before the
    wheel-lift clamp.
    """
    m = params.mass_kg
    static_f = m * G * params.gc_to_rear_axle_m / params.wheelbase_m / 2.0
    static_r = m * G * params.gc_to_front_axle_m / params.wheelbase_m / 2.0
    dfv = m * a_long * params.gc_height_m / params.wheelbase_m
    track = 0.5 * (params.front_track_m + params.rear_track_m)
    dfr = m / track * params.gc_height_m * a_trasv
    ratio = params.roll_stiffness_front_nmprad / params.roll_stiffness_rear_nmprad
    dfr_rear = dfr / (1.0 + ratio)
    dfr_front = dfr - dfr_rear
    loads = np.array([
        static_f + dfv + dfr_front,
        static_f + dfv - dfr_front,
        static_r - dfv + dfr_rear,
        static_r - dfv - dfr_rear,
    ])
    return np.maximum(loads, 0.0)


def _suspension_kinematics(y, params: VehicleParameters):
    """Per-corner suspension compression and rate from body kinematics."""
    z = y[IDX_Z]
    yaw, pitch, roll = y[IDX_YAW], y[IDX_PITCH], y[IDX_ROLL]
    vx, vy, vz = y[IDX_VX], y[IDX_VY], y[IDX_VZ]
    wx, wy, wz = y[IDX_WX], y[IDX_WY], y[IDX_WZ]
    sp, cp = math.sin(pitch), math.cos(pitch)
    sr, cr = math.sin(roll), math.cos(roll)
    sy_, cy_ = math.sin(yaw), math.cos(yaw)
    r00 = cy_ * cp
    r01 = cy_ * sp * sr - sy_ * cr
    r02 = cy_ * sp * cr + sy_ * sr
    r10 = sy_ * cp
    r11 = sy_ * sp * sr + cy_ * cr
    r12 = sy_ * sp * cr - cy_ * sr
    r20, r21, r22 = -sp, cp * sr, cp * cr
    # world angular velocity (for corner vertical rates)
    wwx = r00 * wx + r01 * wy + r02 * wz
    wwy = r10 * wx + r11 * wy + r12 * wz
    vwz = r20 * vx + r21 * vy + r22 * vz
    h0 = params.gc_height_m
    comp = []
    rate = []
    for xi, yi in params.wheel_offsets:
        ax = r00 * xi + r01 * yi
        ay = r10 * xi + r11 * yi
        az = r20 * xi + r21 * yi
        corner_vz = vwz + wwx * ay - wwy * ax
        comp.append(h0 - (z + az))
        rate.append(-corner_vz)
    return comp, rate


def rigid_body_derivatives(
    y,
    params: VehicleParameters,
    contact_forces_world,
    wheel_net_torques,
    aero_force_world=(0.0, 0.0, 0.0),
):
    """Newton-Euler derivative of the 16-entry state vector.

    ``contact_forces_world`` holds one (Fx, Fy, Fz) ground-frame force
    per wheel, applied at that wheel's contact patch (the point on the
    ground below the wheel centre).  ``wheel_net_torques`` is the net
    spin torque per wheel (drive - brake - tyre reaction).  The aero
    force acts at the GC, so it contributes no moment.
    """
    yaw, pitch, roll = y[IDX_YAW], y[IDX_PITCH], y[IDX_ROLL]
    if abs(pitch) > PITCH_GUARD:
        raise SimulationFault("pitch approached the Euler singularity", 0.0)
    z = y[IDX_Z]
    vx, vy, vz = y[IDX_VX], y[IDX_VY], y[IDX_VZ]
    wx, wy, wz = y[IDX_WX], y[IDX_WY], y[IDX_WZ]

    sy_, cy_ = math.sin(yaw), math.cos(yaw)
    sp, cp = math.sin(pitch), math.cos(pitch)
    sr, cr = math.sin(roll), math.cos(roll)
    r00 = cy_ * cp
    r01 = cy_ * sp * sr - sy_ * cr
    r02 = cy_ * sp * cr + sy_ * sr
    r10 = sy_ * cp
    r11 = sy_ * sp * sr + cy_ * cr
    r12 = sy_ * sp * cr - cy_ * sr
    r20, r21, r22 = -sp, cp * sr, cp * cr

    m = params.mass_kg
    fx_b = m * G * sp
    fy_b = -m * G * cp * sr
    fz_b = -m * G * cp * cr
    mx_b = my_b = mz_b = 0.0

    ax_, ay_ = aero_force_world[0], aero_force_world[1]
    az_ = aero_force_world[2]
    fx_b += r00 * ax_ + r10 * ay_ + r20 * az_
    fy_b += r01 * ax_ + r11 * ay_ + r21 * az_
    fz_b += r02 * ax_ + r12 * ay_ + r22 * az_

    for (xi, yi), force in zip(params.wheel_offsets, contact_forces_world):
        fxw, fyw, fzw = force
        # world offset of the patch from the GC
        ox = r00 * xi + r01 * yi
        oy = r10 * xi + r11 * yi
        oz = -z
        fb_x = r00 * fxw + r10 * fyw + r20 * fzw
        fb_y = r01 * fxw + r11 * fyw + r21 * fzw
        fb_z = r02 * fxw + r12 * fyw + r22 * fzw
        px = r00 * ox + r10 * oy + r20 * oz
        py = r01 * ox + r11 * oy + r21 * oz
        pz = r02 * ox + r12 * oy + r22 * oz
        fx_b += fb_x
        fy_b += fb_y
        fz_b += fb_z
        mx_b += py * fb_z - pz * fb_y
        my_b += pz * fb_x - px * fb_z
        mz_b += px * fb_y - py * fb_x

    ix, iy, iz = params.inertia_roll_kgm2, params.inertia_pitch_kgm2, params.inertia_yaw_kgm2
    dy = np.empty(N_STATES)
    dy[IDX_X] = r00 * vx + r01 * vy + r02 * vz
    dy[IDX_Y] = r10 * vx + r11 * vy + r12 * vz
    dy[IDX_Z] = r20 * vx + r21 * vy + r22 * vz
    tp = sp / cp
    dy[IDX_ROLL] = wx + tp * (wy * sr + wz * cr)
    dy[IDX_PITCH] = wy * cr - wz * sr
    dy[IDX_YAW] = (wy * sr + wz * cr) / cp
    dy[IDX_VX] = fx_b / m - (wy * vz - wz * vy)
    dy[IDX_VY] = fy_b / m - (wz * vx - wx * vz)
    dy[IDX_VZ] = fz_b / m - (wx * vy - wy * vx)
    dy[IDX_WX] = (mx_b - (iz - iy) * wy * wz) / ix
    dy[IDX_WY] = (my_b - (ix - iz) * wz * wx) / iy
    dy[IDX_WZ] = (mz_b - (iy - ix) * wx * wy) / iz
    iw = params.wheel_spin_inertia_kgm2
    for i in range(4):
        dy[IDX_SPIN + i] = wheel_net_torques[i] / iw
    return dy


@dataclass
class PlantOutputs:
    """Per-tick observables used by the controllers and the trace."""

    loads_n: tuple
    sigma: tuple
    alpha: tuple
    f_long_n: tuple
    f_trasv_n: tuple
    accel_long_mps2: float   # body-frame, drive-positive
    accel_trasv_mps2: float  # body-frame, left-positive
    blend: float


class VehiclePlant:
    """Closed force model: suspension loads, tyre forces, aero drag and
    actuation torques assembled into the rigid-body derivative."""

    #: Regularization of the brake-torque sign at low wheel speed [rad/s].
    OMEGA_REG = 1.0

    def __init__(
        self,
        params: VehicleParameters,
        inflated: InflatedFrictionModel,
        deflated: DeflatedFrictionModel,
        burst: BurstEvent | None = None,
    ):
        self.params = params
        self.inflated = inflated
        self.deflated = deflated
        self.burst = burst

    def initial_state(self, x: float, y: float, heading: float, speed: float) -> np.ndarray:
        """Vehicle at ride height, rolling straight at ``speed``."""
        state = np.zeros(N_STATES)
        state[IDX_X] = x
        state[IDX_Y] = y
        state[IDX_Z] = self.params.gc_height_m
        state[IDX_YAW] = heading
        state[IDX_VX] = speed
        state[IDX_SPIN:IDX_SPIN + 4] = speed / self.params.wheel_radius_m
        return state

    def _contact_loads(self, y):
        """Suspension-derived vertical load per wheel [N]."""
        p = self.params
        comp, rate = _suspension_kinematics(y, p)
        static = p.static_loads_n
        travel = p.suspension_travel_m
        k = p.spring_rate_npm
        c = p.damper_rate_nspm
        loads = []
        for i in range(4):
            n = static[i] + k * comp[i] + c * rate[i]
            if comp[i] > travel:
                n += END_STOP_FACTOR * k * (comp[i] - travel)
            elif comp[i] < -travel:
                n += END_STOP_FACTOR * k * (comp[i] + travel)
            loads.append(n)
        loads[0] += p.antiroll_front_npm * (comp[0] - comp[1])
        loads[1] += p.antiroll_front_npm * (comp[1] - comp[0])
        loads[2] += p.antiroll_rear_npm * (comp[2] - comp[3])
        loads[3] += p.antiroll_rear_npm * (comp[3] - comp[2])
        return [max(0.0, n) for n in loads]

    def derivatives(self, t: float, y, act: ActuationSet, collect: PlantOutputs | None = None):
        """Time derivative of the state under the given actuation.

        With ``collect`` an (ignored-content) PlantOutputs instance, the
        per-wheel observables of this evaluation are written into it.
        """
        p = self.params
        if not math.isfinite(y[IDX_VX]) or not math.isfinite(y[IDX_WZ]):
            raise SimulationFault("non-finite state entered the force model", t)
        yaw, pitch, roll = y[IDX_YAW], y[IDX_PITCH], y[IDX_ROLL]
        z = y[IDX_Z]
        vx, vy, vz = y[IDX_VX], y[IDX_VY], y[IDX_VZ]
        wx, wy, wz = y[IDX_WX], y[IDX_WY], y[IDX_WZ]
        sy_, cy_ = math.sin(yaw), math.cos(yaw)
        sp, cp = math.sin(pitch), math.cos(pitch)
        sr, cr = math.sin(roll), math.cos(roll)
        r00 = cy_ * cp
        r01 = cy_ * sp * sr - sy_ * cr
        r02 = cy_ * sp * cr + sy_ * sr
        r10 = sy_ * cp
        r11 = sy_ * sp * sr + cy_ * cr
        r12 = sy_ * sp * cr - cy_ * sr
        r20, r21, r22 = -sp, cp * sr, cp * cr

        vwx = r00 * vx + r01 * vy + r02 * vz
        vwy = r10 * vx + r11 * vy + r12 * vz
        wwx = r00 * wx + r01 * wy + r02 * wz
        wwy = r10 * wx + r11 * wy + r12 * wz
        wwz = r20 * wx + r21 * wy + r22 * wz

        loads = self._contact_loads(y)
        blend = inflation_blend(self.burst, t)
        burst_idx = self.burst.wheel_index if self.burst is not None else -1
        r_w = p.wheel_radius_m
        drive = [0.0, 0.0, 0.0, 0.0]
        if act.engine_torque_nm != 0.0:
            if p.drive_axle == "front":
                drive[0] = drive[1] = 0.5 * act.engine_torque_nm
            else:
                drive[2] = drive[3] = 0.5 * act.engine_torque_nm

        forces_world = []
        torques = []
        sigmas = []
        alphas = []
        flongs = []
        flats = []
        for i, (xi, yi) in enumerate(p.wheel_offsets):
            steer = act.steer_rad if i < 2 else 0.0
            heading = yaw + steer
            ch, sh = math.cos(heading), math.sin(heading)
            ox = r00 * xi + r01 * yi
            oy = r10 * xi + r11 * yi
            vpx = vwx + wwy * z - wwz * oy
            vpy = vwy + wwz * ox - wwx * z
            v_long = vpx * ch + vpy * sh
            v_lat = -vpx * sh + vpy * ch
            omega = y[IDX_SPIN + i]
            sigma, alpha = compute_slip(omega, r_w, v_long, v_lat)
            n = loads[i]
            contact = TyreContactState(sigma, alpha, n, v_long, v_lat)
            fl_i, ft_i, fl_d, ft_d = tyre_force_parts(contact, self.inflated, self.deflated)
            b = blend if i == burst_idx else 1.0
            f_long = b * fl_i + (1.0 - b) * fl_d
            f_lat = b * ft_i + (1.0 - b) * ft_d
            # Spin torque: the rolling tyre reacts its traction force; the
            # deflated carcass drags the rim toward free rolling.
            spin_torque = -b * fl_i * r_w
            if b < 1.0:
                slide = math.tanh((omega * r_w - v_long) / 0.5)
                spin_torque -= (1.0 - b) * self.deflated.mu_long_burst * n * r_w * slide
            brake = act.brake_torques_nm[i] * math.tanh(omega / self.OMEGA_REG)
            torques.append(drive[i] - brake + spin_torque)
            forces_world.append((
                f_long * ch - f_lat * sh,
                f_long * sh + f_lat * ch,
                n,
            ))
            sigmas.append(sigma)
            alphas.append(alpha)
            flongs.append(f_long)
            flats.append(f_lat)

        vh = math.hypot(vwx, vwy)
        qa = -0.5 * RHO_AIR * p.drag_area_m2 * vh
        aero = (qa * vwx, qa * vwy, 0.0)

        dy = rigid_body_derivatives(y, p, forces_world, torques, aero)
        if collect is not None:
            collect.loads_n = tuple(loads)
            collect.sigma = tuple(sigmas)
            collect.alpha = tuple(alphas)
            collect.f_long_n = tuple(flongs)
            collect.f_trasv_n = tuple(flats)
            collect.accel_long_mps2 = dy[IDX_VX] + (wy * vz - wz * vy)
            collect.accel_trasv_mps2 = dy[IDX_VY] + (wz * vx - wx * vz)
            collect.blend = blend
        return dy

    def outputs(self, t: float, y, act: ActuationSet) -> PlantOutputs:
        """Observables at the current state (one extra force evaluation)."""
        out = PlantOutputs((), (), (), (), (), 0.0, 0.0, 1.0)
        self.derivatives(t, y, act, collect=out)
        return out


def rk4_step(f, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical 4-stage Runge-Kutta step; deterministic and 4th
    order on smooth fields."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + (0.5 * dt) * k1)
    k3 = f(t + 0.5 * dt, y + (0.5 * dt) * k2)
    k4 = f(t + dt, y + dt * k3)
    y_next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_next)):
        raise SimulationFault("integration produced a non-finite state", t + dt)
    return y_next
