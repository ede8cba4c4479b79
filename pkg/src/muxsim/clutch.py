"""Electrostatic capstan clutch: torque capacity, engagement and slip.

Torque capacity combines a lumped pretension torque with Johnsen-Rahbek
clamping pressure amplified by the capstan gain ``exp(mu * theta) - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from scipy.optimize import brentq

VACUUM_PERMITTIVITY = 8.854187817e-12  # F/m

# Torque carried by the 500 g weight on the 87.4 mm wheel during the
# engagement-time and max-power measurements.
REFERENCE_LOAD_TORQUE_NM = 0.43
REFERENCE_VOLTAGE_V = 900.0

# An exponential rise counts as "fully engaged" once it reaches this
# fraction of its asymptote (three time constants).
_SETTLED = 1.0 - math.exp(-3.0)


class BreakdownError(ValueError):
    """Requested voltage exceeds the dielectric breakdown guard."""


def _pressure_bracket(d, g, eps_d, eps_g):
    return (eps_g * eps_d / (d * eps_g + g * eps_d)) ** 2 + (eps_g / g) ** 2


@dataclass(frozen=True)
class ClutchParams:
    shaft_radius_m: float = 0.0127
    dielectric_thickness_m: float = 55e-6
    air_gap_m: float = 1.0e-6
    rel_permittivity_dielectric: float = 3.9
    rel_permittivity_gap: float = 1.0
    vacuum_permittivity_F_per_m: float = VACUUM_PERMITTIVITY
    electrode_width_m: float = 0.010
    wrap_angle_rad: float = 3.54
    friction_coefficient: float = field(default=None)  # type: ignore[assignment]
    pretension_torque_Nm: float = 0.02
    voltage_ceiling_V: float = 1000.0
    engagement_time_s: float = 0.481
    release_time_s: float = 0.120
    drive_voltage_V: float = REFERENCE_VOLTAGE_V
    engagement_threshold_Nm: float = REFERENCE_LOAD_TORQUE_NM
    slip_knee_rpm: float = 60.0
    slip_cutoff_rpm: float = 70.0

    def __post_init__(self):
        if self.friction_coefficient is None:
            object.__setattr__(self, "friction_coefficient", DEFAULT_FRICTION_COEFFICIENT)
        positive = {
            "shaft_radius_m": self.shaft_radius_m,
            "dielectric_thickness_m": self.dielectric_thickness_m,
            "air_gap_m": self.air_gap_m,
            "rel_permittivity_dielectric": self.rel_permittivity_dielectric,
            "rel_permittivity_gap": self.rel_permittivity_gap,
            "vacuum_permittivity_F_per_m": self.vacuum_permittivity_F_per_m,
            "electrode_width_m": self.electrode_width_m,
            "voltage_ceiling_V": self.voltage_ceiling_V,
            "engagement_time_s": self.engagement_time_s,
            "release_time_s": self.release_time_s,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be > 0, got {value!r}")
        if self.wrap_angle_rad < 0:
            raise ValueError("wrap_angle_rad must be >= 0")
        if self.friction_coefficient < 0:
            raise ValueError("friction_coefficient must be >= 0")
        if self.pretension_torque_Nm < 0:
            raise ValueError("pretension_torque_Nm must be >= 0")
        if not self.air_gap_m < self.dielectric_thickness_m:
            raise ValueError("air_gap_m must be smaller than dielectric_thickness_m")
        if not 0 <= self.drive_voltage_V <= self.voltage_ceiling_V:
            raise ValueError("drive_voltage_V must lie in [0, voltage_ceiling_V]")
        if self.engagement_threshold_Nm < 0:
            raise ValueError("engagement_threshold_Nm must be >= 0")
        if not 0 <= self.slip_knee_rpm < self.slip_cutoff_rpm:
            raise ValueError("need 0 <= slip_knee_rpm < slip_cutoff_rpm")


@dataclass(frozen=True)
class ClutchDriveState:
    applied_voltage_V: float = 0.0
    engaged_fraction: float = 0.0
    slipping: bool = False

    def __post_init__(self):
        if self.applied_voltage_V < 0:
            raise ValueError("applied_voltage_V must be >= 0")
        if not 0.0 <= self.engaged_fraction <= 1.0:
            raise ValueError("engaged_fraction must lie in [0, 1]")


def _check_voltage(p: ClutchParams, voltage: float) -> None:
    if voltage < 0:
        raise ValueError(f"voltage must be >= 0, got {voltage}")
    if voltage > p.voltage_ceiling_V:
        raise BreakdownError(
            f"{voltage} V exceeds the breakdown guard of {p.voltage_ceiling_V} V"
        )


def electrostatic_pressure(p: ClutchParams, voltage: float) -> float:
    """Clamping pressure (Pa) between band and dielectric at ``voltage``."""
    _check_voltage(p, voltage)
    bracket = _pressure_bracket(
        p.dielectric_thickness_m, p.air_gap_m,
        p.rel_permittivity_dielectric, p.rel_permittivity_gap,
    )
    return 0.5 * p.vacuum_permittivity_F_per_m * voltage**2 * bracket


def capstan_gain(p: ClutchParams) -> float:
    return math.expm1(p.friction_coefficient * p.wrap_angle_rad)


def electrostatic_torque(p: ClutchParams, voltage: float) -> float:
    """Voltage-dependent part of the holding torque (N*m)."""
    r = p.shaft_radius_m
    return r * electrostatic_pressure(p, voltage) * p.electrode_width_m * r * capstan_gain(p)


def torque_capacity(p: ClutchParams, voltage: float) -> float:
    """Load torque (N*m) a fully engaged clutch holds before slipping."""
    return p.pretension_torque_Nm + electrostatic_torque(p, voltage)


def speed_derating(p: ClutchParams, shaft_rpm: float) -> float:
    """Capacity multiplier versus input speed: 1 up to the knee, 0 past cutoff."""
    rpm = abs(shaft_rpm)
    if rpm <= p.slip_knee_rpm:
        return 1.0
    if rpm >= p.slip_cutoff_rpm:
        return 0.0
    return (p.slip_cutoff_rpm - rpm) / (p.slip_cutoff_rpm - p.slip_knee_rpm)


def max_clutching_power(p: ClutchParams, voltage: float | None = None) -> tuple[float, float]:
    """Peak transmissible power (W) over input speed, and the rpm it occurs at."""
    v = p.drive_voltage_V if voltage is None else voltage
    cap = torque_capacity(p, v)
    knee, cutoff = p.slip_knee_rpm, p.slip_cutoff_rpm
    # On the derating ramp P ~ (cutoff - n) * n, peaking at cutoff / 2.
    best_rpm = max(knee, cutoff / 2.0)
    power = cap * speed_derating(p, best_rpm) * best_rpm * 2.0 * math.pi / 60.0
    return power, best_rpm


def transmitted_torque(
    p: ClutchParams, s: ClutchDriveState, demanded: float, shaft_rpm: float = 0.0
) -> tuple[float, bool]:
    if demanded < 0:
        raise ValueError("demanded torque must be >= 0")
    available = s.engaged_fraction * torque_capacity(p, s.applied_voltage_V)
    available *= speed_derating(p, shaft_rpm)
    # Relative guard so a load sized exactly at capacity does not flag slip on roundoff.
    if demanded > available * (1.0 + 1e-12):
        return available, True
    return demanded, False


def _threshold_fraction(p: ClutchParams) -> float:
    cap = torque_capacity(p, p.drive_voltage_V)
    if cap <= 0:
        return 1.0
    return min(1.0, p.engagement_threshold_Nm / cap)


def engagement_time_constant(p: ClutchParams) -> float:
    """First-order time constant placing the threshold crossing at engagement_time_s."""
    f_star = _threshold_fraction(p)
    if f_star <= 0:
        return p.engagement_time_s / 3.0
    return -p.engagement_time_s / math.log1p(-_SETTLED * f_star)


def engagement_profile(p: ClutchParams, t_since_voltage_on: float) -> float:
    """Engaged fraction after voltage has been on for ``t_since_voltage_on`` s.

    First-order rise ``1 - exp(-t/tau)`` normalised by its three-time-constant
    value, so the clutch reaches full engagement in finite time. ``tau`` is
    chosen so that ``fraction * capacity`` crosses the reference load torque
    exactly at ``engagement_time_s``.
    """
    if t_since_voltage_on < 0:
        raise ValueError("time must be >= 0")
    tau = engagement_time_constant(p)
    return min(1.0, -math.expm1(-t_since_voltage_on / tau) / _SETTLED)


def release_profile(
    p: ClutchParams, t_since_voltage_off: float, start_fraction: float = 1.0,
    release_time_s: float | None = None,
) -> float:
    """Engaged fraction after voltage removal; reaches 0 at the release time."""
    if t_since_voltage_off < 0:
        raise ValueError("time must be >= 0")
    t_rel = p.release_time_s if release_time_s is None else release_time_s
    if t_rel <= 0:
        return 0.0
    tau = t_rel / 3.0
    released = -math.expm1(-t_since_voltage_off / tau) / _SETTLED
    return start_fraction * max(0.0, 1.0 - released)


def calibrate_friction_coefficient(
    p: ClutchParams,
    target_torque_Nm: float = REFERENCE_LOAD_TORQUE_NM,
    voltage: float = REFERENCE_VOLTAGE_V,
    mu_max: float = 5.0,
) -> float:
    """Friction coefficient giving ``torque_capacity(voltage) == target_torque_Nm``."""
    def residual(mu):
        return torque_capacity(replace(p, friction_coefficient=mu), voltage) - target_torque_Nm

    if residual(0.0) > 0:
        raise ValueError("pretension alone already exceeds the target torque")
    if residual(mu_max) < 0:
        raise ValueError("target torque unreachable for mu <= mu_max")
    return brentq(residual, 0.0, mu_max, xtol=1e-15, rtol=1e-15, maxiter=200)


def _default_mu() -> float:
    # Bootstrap with a placeholder mu; capacity is then recalibrated.
    probe = ClutchParams.__new__(ClutchParams)
    for f in ClutchParams.__dataclass_fields__.values():
        object.__setattr__(probe, f.name, f.default)
    object.__setattr__(probe, "friction_coefficient", 0.0)
    return calibrate_friction_coefficient(probe)


DEFAULT_FRICTION_COEFFICIENT = _default_mu()
