"""Anti-blockage brake layer: a fuzzy modulator keeps each wheel away
from lock, and a distributor apportions torque by the vertical-load
share computed from the measured GC accelerations.

The modulator works on braking-slip magnitude (0 free rolling, 1
locked) so the rules read naturally; the raw per-wheel demand is pedal
fraction times the brake limit plus the stability controller's delta.
As in the source system, the true slip is used directly instead of an
estimated one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fuzzy import FuzzyRuleBase, builtin_rule_base
from .vehicle import VehicleParameters, vertical_loads


@dataclass(frozen=True)
class BrakeDemand:
    """Inputs of the brake modulator for one controller tick."""

    pedal: float
    iesp_delta_nm: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    slip: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    slip_rate_1ps: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if not 0.0 <= self.pedal <= 1.0:
            raise ValueError("pedal must lie in [0, 1]")


@dataclass(frozen=True)
class BrakeCommand:
    torques_nm: tuple[float, float, float, float]


def brake_modulator(
    demand: BrakeDemand,
    max_torque_nm: float,
    rulebase: FuzzyRuleBase | None = None,
) -> tuple[float, float, float, float]:
    """Raw modulated torque per wheel [N m].

    The fuzzy multiplier is 1 at zero slip (pedal demand passes through)
    and collapses toward 0 as the braking slip deepens while still
    growing, which releases the wheel before it locks.
    """
    rb = rulebase if rulebase is not None else builtin_rule_base("abs_modulator")
    out = []
    for i in range(4):
        requested = demand.pedal * max_torque_nm + demand.iesp_delta_nm[i]
        braking_slip = max(0.0, -demand.slip[i])
        mult = rb.evaluate(braking_slip, demand.slip_rate_1ps[i]).value
        out.append(max(0.0, requested * mult))
    return tuple(out)


def brake_distributor(
    raw_torques,
    a_long: float,
    a_trasv: float,
    params: VehicleParameters,
) -> BrakeCommand:
    """Scale each wheel's torque by its share of the vertical load
    (computed from the accelerations), clamped to [0, max].  The scale
    is normalized so an even static split leaves the demand unchanged;
    a lifted wheel gets no torque.
    """
    loads = vertical_loads(params, a_long, a_trasv)
    total = float(np.sum(loads))
    torques = []
    for i in range(4):
        share = loads[i] / total if total > 0.0 else 0.0
        t = raw_torques[i] * 4.0 * share
        torques.append(min(max(t, 0.0), params.brake_max_torque_nm))
    return BrakeCommand(tuple(torques))


class AbsController:
    """Modulator + distributor with the slip-rate bookkeeping between
    controller ticks."""

    def __init__(self, params: VehicleParameters, rulebase: FuzzyRuleBase | None = None):
        self.params = params
        self.rulebase = rulebase if rulebase is not None else builtin_rule_base("abs_modulator")
        self._prev_braking_slip = (0.0, 0.0, 0.0, 0.0)

    def tick(
        self,
        pedal: float,
        iesp_delta_nm,
        slip,
        a_long: float,
        a_trasv: float,
        dt: float,
    ) -> BrakeCommand:
        braking = tuple(max(0.0, -s) for s in slip)
        rate = tuple((b - p) / dt for b, p in zip(braking, self._prev_braking_slip))
        self._prev_braking_slip = braking
        demand = BrakeDemand(pedal, tuple(iesp_delta_nm), tuple(slip), rate)
        raw = brake_modulator(demand, self.params.brake_max_torque_nm, self.rulebase)
        return brake_distributor(raw, a_long, a_trasv, self.params)
