import math

import pytest
from hypothesis import given, strategies as st

from muxsim.calibration import measured_loss_model
from muxsim.drivetrain import (
    FrictionLossModel, LeadscrewSpec, LoadSpec, MotorSpec, ShaftPair, ideal_lift_torque,
    load_tension, required_shaft_torque, self_locks, slider_displacement, slider_velocity,
    transmission_efficiency,
)

SCREW = LeadscrewSpec()


def test_slider_speed_at_18_rpm():
    assert slider_velocity(SCREW, 18.0) == pytest.approx(0.0042, rel=1e-12)
    assert slider_velocity(SCREW, -18.0) == pytest.approx(-0.0042, rel=1e-12)
    assert slider_displacement(SCREW, 18.0, 0.04 / 0.0042) == pytest.approx(0.04)


def test_shafts_counter_rotate():
    pair = ShaftPair.from_motor(MotorSpec())
    assert pair.ccw_speed_rpm == -pair.cw_speed_rpm == -18.0
    with pytest.raises(ValueError):
        ShaftPair(18.0, -17.0)


def test_motor_validation():
    with pytest.raises(ValueError):
        MotorSpec(direction="CCW")
    with pytest.raises(ValueError):
        MotorSpec(speed_rpm=-1)
    assert MotorSpec(speed_rpm=60).angular_speed == pytest.approx(2 * math.pi)


@given(st.floats(0.0, 0.05), st.floats(0.002, 0.05), st.floats(0.01, 1.0))
def test_self_lock_trig_oracle(lead, dm, mu):
    screw = LeadscrewSpec(thread_lead_m=lead, mean_diameter_m=dm, thread_friction_coefficient=mu)
    # tan form avoids sharing the atan code path
    assert self_locks(screw) == (mu > lead / (math.pi * dm))


def test_default_screw_self_locks_and_coarse_one_does_not():
    assert self_locks(SCREW)
    assert not self_locks(LeadscrewSpec(thread_lead_m=0.014))
    assert self_locks(LeadscrewSpec(thread_lead_m=0.0, effective_lead_m_per_rev=0.0))


def test_ideal_torque():
    assert ideal_lift_torque(SCREW, 22.27) == pytest.approx(22.27 * 0.014 / (2 * math.pi))


def test_loss_model_floor():
    loss = FrictionLossModel(-0.05, 0.01)
    assert loss.loss_torque(1.0) == 0.0
    assert loss.loss_torque(10.0) == pytest.approx(0.05)
    with pytest.raises(ValueError):
        FrictionLossModel(0.0, -0.01)


def test_measured_losses_reproduce_anchors():
    loss = measured_loss_model()
    assert required_shaft_torque(SCREW, loss, 22.27) == pytest.approx(0.375, rel=0.03)
    assert transmission_efficiency(SCREW, loss, 2.27 * 9.81) == pytest.approx(0.1309, abs=1e-9)
    assert transmission_efficiency(SCREW, loss, 0.2406 * 9.81) == pytest.approx(0.877, abs=1e-9)


@given(st.floats(0.0, 100.0), st.floats(-0.1, 0.1), st.floats(0.0, 0.05))
def test_efficiency_at_most_one(F, a, b):
    eff = transmission_efficiency(SCREW, FrictionLossModel(a, b), F)
    assert 0.0 <= eff <= 1.0 + 1e-12


@given(st.floats(0.0, 100.0))
def test_lowering_needs_no_more_torque_than_lifting(F):
    loss = measured_loss_model()
    assert required_shaft_torque(SCREW, loss, F, lifting=False) <= required_shaft_torque(SCREW, loss, F)
    assert required_shaft_torque(SCREW, loss, F, lifting=False) >= 0.0


def test_zero_lead_screw():
    screw = LeadscrewSpec(effective_lead_m_per_rev=0.0)
    assert slider_velocity(screw, 18.0) == 0.0
    assert transmission_efficiency(screw, FrictionLossModel(0.0, 0.0), 10.0) == 0.0


def test_load_tension():
    assert load_tension(LoadSpec(mass_kg=2.27)) == pytest.approx(22.2687)
    assert load_tension(LoadSpec("constant_tension", tension_N=5.0)) == 5.0
    with pytest.raises(ValueError):
        load_tension(LoadSpec(mass_kg=-1.0))
    with pytest.raises(ValueError):
        LoadSpec(kind="spring")
