"""Tyre-road contact: slip kinematics and friction forces for correctly
inflated, deflated, and bursting (blended) tyres.

All functions are pure and stateless given (state, models, time).

Conventions
-----------
Wheel frame: x along the wheel heading projected on the ground, y to the
left.  Longitudinal slip ``sigma`` is (omega*r - v_long)/max(|v_long|, v_eps),
so -1 is a locked wheel under forward motion.  Slip angle ``alpha`` is
atan2(v_lat, |v_long|).  Returned friction coefficients are force-ready:
``mu_long`` carries the sign of sigma (drive positive), ``mu_trasv`` opposes
the slip angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

WHEEL_NAMES = ("front_left", "front_right", "rear_left", "rear_right")

#: Regularization floor for the slip denominator [m/s]; avoids the
#: sigma singularity at standstill.
SLIP_SPEED_FLOOR = 0.5

#: Below this contact-patch speed the deflated (sliding-block) force
#: fades linearly to zero so a parked car does not creep.
CREEP_SPEED = 0.5


def compute_slip(
    wheel_spin: float,
    wheel_radius: float,
    v_long: float,
    v_lat: float,
    *,
    v_eps: float = SLIP_SPEED_FLOOR,
    sigma_cap: float = 1.0,
) -> tuple[float, float]:
    """Longitudinal slip and slip angle at the contact patch.

    wheel_spin [rad/s], wheel_radius [m], contact-patch velocity
    components in the wheel frame [m/s].
    """
    denom = max(abs(v_long), v_eps)
    sigma = (wheel_spin * wheel_radius - v_long) / denom
    if sigma < -1.0:
        sigma = -1.0
    elif sigma > sigma_cap:
        sigma = sigma_cap
    alpha = math.atan2(v_lat, abs(v_long))
    return sigma, alpha


def _smoothfall(u: float) -> float:
    """Cubic smoothstep from 1 at u=0 to 0 at u=1, zero slope at both ends."""
    if u <= 0.0:
        return 1.0
    if u >= 1.0:
        return 0.0
    return 1.0 - u * u * (3.0 - 2.0 * u)


@dataclass(frozen=True)
class InflatedFrictionModel:
    """Friction surfaces for a correctly inflated tyre.

    The pure-slip curves rise as 2s/(1+s^2) to the peak (at sigma_peak
    resp. alpha_peak) and fall smoothly to ``falloff`` times the peak at
    full slip.  Combined slip couples the two components through the
    adherence ellipse normalized by the pure-slip values, so the
    normalized utilisation is exactly 1 whenever both slip components
    are nonzero.
    """

    mu_long_max: float
    mu_trasv_max: float
    sigma_peak: float = 0.15
    alpha_peak_rad: float = math.radians(7.0)
    long_falloff: float = 0.75
    trasv_falloff: float = 0.40
    #: Slip-angle span past the peak over which the transversal curve
    #: settles onto its sliding plateau.
    trasv_fall_width_rad: float = 0.20

    def __post_init__(self):
        if self.mu_long_max <= 0 or self.mu_trasv_max <= 0:
            raise ValueError("friction maxima must be positive")
        if not 0.0 < self.sigma_peak < 1.0:
            raise ValueError("sigma_peak must lie in (0, 1)")
        if not 0.0 < self.alpha_peak_rad < math.pi / 2:
            raise ValueError("alpha_peak_rad must lie in (0, pi/2)")
        if not 0.0 < self.long_falloff <= 1.0 or not 0.0 < self.trasv_falloff <= 1.0:
            raise ValueError("falloff fractions must lie in (0, 1]")
        if self.trasv_fall_width_rad <= 0.0:
            raise ValueError("trasv_fall_width_rad must be > 0")

    def mu_long_pure(self, sigma_mag: float) -> float:
        """Pure longitudinal friction at zero slip angle."""
        if sigma_mag <= self.sigma_peak:
            s = sigma_mag / self.sigma_peak
            return self.mu_long_max * 2.0 * s / (1.0 + s * s)
        u = (sigma_mag - self.sigma_peak) / (1.0 - self.sigma_peak)
        keep = self.long_falloff
        return self.mu_long_max * (keep + (1.0 - keep) * _smoothfall(min(u, 1.0)))

    def mu_trasv_pure(self, alpha_mag: float) -> float:
        """Pure transversal friction at zero longitudinal slip."""
        if alpha_mag <= self.alpha_peak_rad:
            a = alpha_mag / self.alpha_peak_rad
            return self.mu_trasv_max * 2.0 * a / (1.0 + a * a)
        u = (alpha_mag - self.alpha_peak_rad) / self.trasv_fall_width_rad
        keep = self.trasv_falloff
        return self.mu_trasv_max * (keep + (1.0 - keep) * _smoothfall(min(u, 1.0)))


def friction_inflated(
    model: InflatedFrictionModel, sigma: float, alpha: float
) -> tuple[float, float]:
    """Combined-slip friction coefficients (mu_long, mu_trasv).

    The slip demands are normalized by their peak locations; the mixing
    angle distributes the pure-slip magnitudes on the adherence ellipse.
    This makes the transversal component non-increasing in |sigma| (the
    saturation correction past the peak) while the longitudinal
    component follows the falling pure curve.
    """
    s_norm = abs(sigma) / model.sigma_peak
    a_norm = abs(alpha) / model.alpha_peak_rad
    if s_norm == 0.0 and a_norm == 0.0:
        return 0.0, 0.0
    chi = math.atan2(a_norm, s_norm)
    mu_l = model.mu_long_pure(abs(sigma)) * math.cos(chi)
    mu_t = model.mu_trasv_pure(abs(alpha)) * math.sin(chi)
    return math.copysign(mu_l, sigma), -math.copysign(mu_t, alpha)


@dataclass(frozen=True)
class DeflatedFrictionModel:
    """Elliptic polar friction of a deflated tyre: mu depends only on the
    direction of the contact-patch velocity relative to the wheel plane."""

    mu_long_burst: float
    mu_trasv_burst: float

    def __post_init__(self):
        for v in (self.mu_long_burst, self.mu_trasv_burst):
            if not 0.0 < v <= 1.0:
                raise ValueError("burst semi-axes must lie in (0, 1]")


def friction_deflated(model: DeflatedFrictionModel, slip_direction_rad: float) -> float:
    """Friction magnitude on the elliptic polar for a sliding direction."""
    return math.hypot(
        model.mu_long_burst * math.cos(slip_direction_rad),
        model.mu_trasv_burst * math.sin(slip_direction_rad),
    )


@dataclass(frozen=True)
class BurstEvent:
    """Commanded transition of one tyre to the deflated model."""

    wheel: str
    t_start: float
    duration: float = 3.0
    model: DeflatedFrictionModel = DeflatedFrictionModel(0.05, 0.05)

    def __post_init__(self):
        if self.wheel not in WHEEL_NAMES:
            raise ValueError(f"unknown wheel '{self.wheel}', expected one of {WHEEL_NAMES}")
        if self.t_start < 0.0:
            raise ValueError("burst start time must be >= 0")
        if self.duration <= 0.0:
            raise ValueError("deflation duration must be > 0")

    @property
    def wheel_index(self) -> int:
        return WHEEL_NAMES.index(self.wheel)


def inflation_blend(event: BurstEvent | None, t: float) -> float:
    """1 before the burst, 0 after full deflation, linear in between."""
    if event is None or t <= event.t_start:
        return 1.0
    if t >= event.t_start + event.duration:
        return 0.0
    return 1.0 - (t - event.t_start) / event.duration


@dataclass(frozen=True)
class TyreContactState:
    """Slip state and load of one contact patch (wheel frame)."""

    sigma: float
    alpha: float
    load_n: float
    v_long: float
    v_lat: float


def tyre_force_parts(
    contact: TyreContactState,
    inflated: InflatedFrictionModel,
    deflated: DeflatedFrictionModel,
) -> tuple[float, float, float, float]:
    """Unblended force components (inflated long/lat, deflated long/lat) [N].

    The inflated part follows the combined-slip surfaces.  The deflated
    part is a sliding-block force mu(direction)*N opposing the
    contact-patch velocity, which yields a drag of mu(0)*N on a freely
    rolling deflated wheel; it fades below CREEP_SPEED so a standing car
    stays at rest.
    """
    n = contact.load_n
    if n <= 0.0:
        return 0.0, 0.0, 0.0, 0.0
    mu_l, mu_t = friction_inflated(inflated, contact.sigma, contact.alpha)
    fl_i = mu_l * n
    ft_i = mu_t * n
    speed = math.hypot(contact.v_long, contact.v_lat)
    if speed <= 1e-9:
        return fl_i, ft_i, 0.0, 0.0
    direction = math.atan2(contact.v_lat, contact.v_long)
    mu_d = friction_deflated(deflated, direction)
    scale = min(1.0, speed / CREEP_SPEED) * mu_d * n / speed
    return fl_i, ft_i, -scale * contact.v_long, -scale * contact.v_lat


def tyre_force(
    contact: TyreContactState,
    inflated: InflatedFrictionModel,
    deflated: DeflatedFrictionModel,
    blend: float,
) -> tuple[float, float]:
    """Blended contact force (F_long, F_trasv) [N] in the wheel frame."""
    fl_i, ft_i, fl_d, ft_d = tyre_force_parts(contact, inflated, deflated)
    return (
        blend * fl_i + (1.0 - blend) * fl_d,
        blend * ft_i + (1.0 - blend) * ft_d,
    )
