"""Motor, counter-rotating shafts, leadscrew kinematics, friction losses, loads."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

STANDARD_GRAVITY = 9.81


@dataclass(frozen=True)
class MotorSpec:
    speed_rpm: float = 18.0
    max_torque_Nm: float = 2.0
    direction: Literal["CW"] = "CW"

    def __post_init__(self):
        if self.speed_rpm < 0:
            raise ValueError("speed_rpm must be >= 0")
        if not self.max_torque_Nm > 0:
            raise ValueError("max_torque_Nm must be > 0")
        if self.direction != "CW":
            raise ValueError("motor direction must be 'CW'")

    @property
    def angular_speed(self) -> float:
        return self.speed_rpm * 2.0 * math.pi / 60.0


@dataclass(frozen=True)
class ShaftPair:
    cw_speed_rpm: float
    ccw_speed_rpm: float

    def __post_init__(self):
        if self.ccw_speed_rpm != -self.cw_speed_rpm:
            raise ValueError("shafts must counter-rotate at equal speed")

    @classmethod
    def from_motor(cls, motor: MotorSpec) -> "ShaftPair":
        return cls(motor.speed_rpm, -motor.speed_rpm)


@dataclass(frozen=True)
class LeadscrewSpec:
    """Leadscrew drive.

    ``effective_lead_m_per_rev`` is slider travel per input-shaft revolution
    (output gearing folded in) and sets speed and ideal torque.
    ``thread_lead_m`` is the physical thread lead that decides self-locking.
    """

    effective_lead_m_per_rev: float = 0.014
    mean_diameter_m: float = 0.008
    thread_friction_coefficient: float = 0.20
    thread_lead_m: float = 0.002

    def __post_init__(self):
        # zero lead is admitted as the degenerate, trivially self-locking case
        if self.effective_lead_m_per_rev < 0 or self.thread_lead_m < 0:
            raise ValueError("leads must be >= 0")
        if not self.mean_diameter_m > 0:
            raise ValueError("mean_diameter_m must be > 0")
        if not self.thread_friction_coefficient > 0:
            raise ValueError("thread_friction_coefficient must be > 0")

    @property
    def lead_angle_rad(self) -> float:
        return math.atan(self.thread_lead_m / (math.pi * self.mean_diameter_m))

    @property
    def friction_angle_rad(self) -> float:
        return math.atan(self.thread_friction_coefficient)


@dataclass(frozen=True)
class LoadSpec:
    kind: Literal["hanging_mass", "constant_tension"] = "hanging_mass"
    mass_kg: float = 0.0
    tension_N: float = 0.0
    gravity_m_s2: float = STANDARD_GRAVITY

    def __post_init__(self):
        if self.kind not in ("hanging_mass", "constant_tension"):
            raise ValueError(f"unknown load kind {self.kind!r}")


@dataclass(frozen=True)
class FrictionLossModel:
    """Shaft-side loss torque ``coulomb + load_coefficient * load``, floored at zero.

    The offset may come out negative when fitted to the measured efficiency
    pair; the floor keeps efficiency at or below one for light loads.
    """

    coulomb_torque_Nm: float = 0.0
    load_coefficient_Nm_per_N: float = 0.0

    def __post_init__(self):
        if self.load_coefficient_Nm_per_N < 0:
            raise ValueError("load_coefficient_Nm_per_N must be >= 0")

    def loss_torque(self, load_N: float) -> float:
        return max(0.0, self.coulomb_torque_Nm + self.load_coefficient_Nm_per_N * load_N)


def slider_velocity(screw: LeadscrewSpec, shaft_rpm: float) -> float:
    """Slider speed (m/s); positive rpm (CW drive) moves the slider rightward."""
    return shaft_rpm / 60.0 * screw.effective_lead_m_per_rev


def slider_displacement(screw: LeadscrewSpec, shaft_rpm: float, duration_s: float) -> float:
    return slider_velocity(screw, shaft_rpm) * duration_s


def self_locks(screw: LeadscrewSpec) -> bool:
    return screw.friction_angle_rad > screw.lead_angle_rad


def ideal_lift_torque(screw: LeadscrewSpec, load_N: float) -> float:
    return load_N * screw.effective_lead_m_per_rev / (2.0 * math.pi)


def required_shaft_torque(
    screw: LeadscrewSpec, loss: FrictionLossModel, load_N: float, lifting: bool = True
) -> float:
    """Input-shaft torque to move the slider against ``load_N``.

    Lowering (``lifting=False``) is assisted by the load; the result is
    floored at zero because a self-locking screw never back-drives the input.
    """
    if load_N < 0:
        raise ValueError("load_N must be >= 0")
    ideal = ideal_lift_torque(screw, load_N)
    if not lifting:
        ideal = -ideal
    return max(0.0, ideal + loss.loss_torque(load_N))


def load_tension(load: LoadSpec) -> float:
    if load.kind == "hanging_mass":
        if load.mass_kg < 0:
            raise ValueError("mass_kg must be >= 0")
        return load.mass_kg * load.gravity_m_s2
    if load.tension_N < 0:
        raise ValueError("tension_N must be >= 0")
    return load.tension_N


def transmission_efficiency(screw: LeadscrewSpec, loss: FrictionLossModel, load_N: float) -> float:
    """Steady lifting efficiency: ideal torque over required torque."""
    tau = required_shaft_torque(screw, loss, load_N)
    if tau == 0:
        return 0.0
    return ideal_lift_torque(screw, load_N) / tau
