import dataclasses
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from muxsim.clutch import (
    DEFAULT_FRICTION_COEFFICIENT, BreakdownError, ClutchDriveState, ClutchParams,
    calibrate_friction_coefficient, electrostatic_pressure, engagement_profile,
    max_clutching_power, release_profile, speed_derating, torque_capacity, transmitted_torque,
)

P = ClutchParams()


def mp_capacity(p: ClutchParams, v: float) -> mpmath.mpf:
    """High-precision direct evaluation of the holding-torque formula."""
    with mpmath.workdps(40):
        r, d, g = map(mpmath.mpf, (p.shaft_radius_m, p.dielectric_thickness_m, p.air_gap_m))
        ed, eg, e0 = map(mpmath.mpf, (p.rel_permittivity_dielectric, p.rel_permittivity_gap,
                                      p.vacuum_permittivity_F_per_m))
        l, th, mu = map(mpmath.mpf, (p.electrode_width_m, p.wrap_angle_rad, p.friction_coefficient))
        V = mpmath.mpf(v)
        pressure = e0 / 2 * V**2 * ((eg * ed / (d * eg + g * ed)) ** 2 + (eg / g) ** 2)
        return mpmath.mpf(p.pretension_torque_Nm) + r * pressure * l * r * (mpmath.e ** (mu * th) - 1)


def random_params(rng):
    d = rng.uniform(10e-6, 200e-6)
    ceiling = rng.uniform(100.0, 3000.0)
    return ClutchParams(
        shaft_radius_m=rng.uniform(0.003, 0.05),
        dielectric_thickness_m=d,
        air_gap_m=rng.uniform(0.01, 0.9) * d,
        rel_permittivity_dielectric=rng.uniform(2.0, 12.0),
        rel_permittivity_gap=rng.uniform(1.0, 1.5),
        electrode_width_m=rng.uniform(0.002, 0.05),
        wrap_angle_rad=rng.uniform(0.0, 4 * math.pi),
        friction_coefficient=rng.uniform(0.0, 0.8),
        pretension_torque_Nm=rng.uniform(0.0, 0.2),
        voltage_ceiling_V=ceiling,
        drive_voltage_V=ceiling,
    )


def test_mpmath_oracle_random_draws():
    rng = np.random.default_rng(20240611)
    for _ in range(1000):
        p = random_params(rng)
        v = rng.uniform(0.0, p.voltage_ceiling_V)
        got = torque_capacity(p, v)
        want = float(mp_capacity(p, v))
        assert got == pytest.approx(want, rel=1e-9, abs=0)


def test_zero_voltage_is_pretension():
    assert torque_capacity(P, 0.0) == 0.02


def test_default_capacity_calibrated_to_reference():
    assert torque_capacity(P, 900.0) == pytest.approx(0.43, rel=1e-12)
    assert P.friction_coefficient == DEFAULT_FRICTION_COEFFICIENT
    assert 0.015 < P.friction_coefficient < 0.025


def test_pressure_hand_value():
    eps0, d, g, ed = 8.854187817e-12, 55e-6, 1e-6, 3.9
    bracket = (ed / (d + g * ed)) ** 2 + (1 / g) ** 2
    assert electrostatic_pressure(P, 900.0) == pytest.approx(0.5 * eps0 * 900.0**2 * bracket, rel=1e-14)
    assert electrostatic_pressure(P, 900.0) == pytest.approx(3.6017e6, rel=1e-4)


def test_breakdown_guard():
    with pytest.raises(BreakdownError):
        torque_capacity(P, 1000.1)
    torque_capacity(P, 1000.0)
    with pytest.raises(ValueError):
        torque_capacity(P, -1.0)


@pytest.mark.parametrize("field,value", [
    ("air_gap_m", 0.0), ("air_gap_m", 60e-6), ("shaft_radius_m", -1.0),
    ("friction_coefficient", -0.1), ("pretension_torque_Nm", -0.01), ("drive_voltage_V", 1200.0),
    ("slip_knee_rpm", 80.0),
])
def test_param_validation(field, value):
    with pytest.raises(ValueError):
        ClutchParams(**{field: value})


@given(st.floats(0, 1000), st.floats(0, 1000))
def test_capacity_monotone_in_voltage(a, b):
    lo, hi = sorted((a, b))
    assert torque_capacity(P, lo) <= torque_capacity(P, hi)


@given(st.floats(0.2e-6, 50e-6), st.floats(0.2e-6, 50e-6), st.floats(1, 1000))
def test_capacity_non_increasing_in_gap(g1, g2, v):
    lo, hi = sorted((g1, g2))
    t_lo = torque_capacity(dataclasses.replace(P, air_gap_m=lo), v)
    t_hi = torque_capacity(dataclasses.replace(P, air_gap_m=hi), v)
    assert t_hi <= t_lo * (1 + 1e-12)


@given(st.floats(0, 2), st.floats(0, 2), st.floats(1, 1000))
def test_capacity_monotone_in_mu(m1, m2, v):
    lo, hi = sorted((m1, m2))
    assert torque_capacity(dataclasses.replace(P, friction_coefficient=lo), v) <= torque_capacity(
        dataclasses.replace(P, friction_coefficient=hi), v)


def test_zero_wrap_gives_pretension_only():
    p = dataclasses.replace(P, wrap_angle_rad=0.0)
    assert torque_capacity(p, 900.0) == p.pretension_torque_Nm


def test_max_power_hand_oracle():
    power, rpm = max_clutching_power(P)
    assert rpm == 60.0
    assert power == pytest.approx(0.43 * 2 * math.pi * 60 / 60, rel=1e-12)
    assert power == pytest.approx(2.70, rel=0.01)


@given(st.floats(0, 200))
def test_derating_bounds(rpm):
    f = speed_derating(P, rpm)
    assert 0.0 <= f <= 1.0
    if rpm <= 60:
        assert f == 1.0
    if rpm >= 70:
        assert f == 0.0


def test_engagement_threshold_crossing_at_engagement_time():
    cap = torque_capacity(P, P.drive_voltage_V)
    assert engagement_profile(P, 0.0) == 0.0
    assert engagement_profile(P, P.engagement_time_s) * cap == pytest.approx(0.43, rel=1e-12)
    assert engagement_profile(P, 10.0) == 1.0


@given(st.floats(0, 2), st.floats(0, 2))
def test_engagement_monotone(a, b):
    lo, hi = sorted((a, b))
    assert engagement_profile(P, lo) <= engagement_profile(P, hi)


def test_release_reaches_zero():
    assert release_profile(P, 0.0) == 1.0
    assert release_profile(P, P.release_time_s) == pytest.approx(0.0, abs=1e-15)
    assert release_profile(P, 5.0) == 0.0
    assert 0 < release_profile(P, 0.03, start_fraction=0.5) < 0.5


def test_transmitted_torque_slip():
    full = ClutchDriveState(900.0, 1.0)
    assert transmitted_torque(P, full, 0.3) == (0.3, False)
    tau, slip = transmitted_torque(P, full, 0.5)
    assert slip and tau == pytest.approx(0.43)
    tau, slip = transmitted_torque(P, full, 0.43)
    assert not slip
    assert transmitted_torque(P, full, 0.1, shaft_rpm=75.0) == (0.0, True)
    assert transmitted_torque(P, ClutchDriveState(), 0.01)[1]


@given(st.floats(0.03, 2.0))
def test_calibration_inverse(target):
    mu = calibrate_friction_coefficient(P, target, 900.0)
    assert torque_capacity(dataclasses.replace(P, friction_coefficient=mu), 900.0) == pytest.approx(target, rel=1e-10)


def test_calibration_rejects_unreachable():
    with pytest.raises(ValueError):
        calibrate_friction_coefficient(P, 0.01)
