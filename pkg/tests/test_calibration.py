import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from muxsim.calibration import (
    MEASURED_EFFICIENCY_POINTS, EfficiencyPoint, FitError, TorqueVoltagePoint, fit_air_gap,
    fit_loss_model, holding_torque_curve, measured_loss_model,
)
from muxsim.clutch import ClutchParams, torque_capacity
from muxsim.drivetrain import FrictionLossModel, LeadscrewSpec, transmission_efficiency

P = ClutchParams()
VOLTS = np.linspace(100.0, 900.0, 17)


def synthetic(p, noise=0.0, seed=0):
    clean = holding_torque_curve(p, VOLTS)
    rng = np.random.default_rng(seed)
    y = clean * (1 + noise * rng.standard_normal(len(VOLTS)))
    return [TorqueVoltagePoint(float(v), float(t)) for v, t in zip(VOLTS, y)]


def test_curve_matches_scalar_model():
    scalar = [torque_capacity(P, v) for v in VOLTS]
    assert holding_torque_curve(P, VOLTS) == pytest.approx(scalar, rel=1e-13)


def test_exact_recovery():
    fit = fit_air_gap(synthetic(P), dataclasses.replace(P, air_gap_m=2e-6))
    assert fit.params.air_gap_m == pytest.approx(1e-6, rel=1e-6)
    assert fit.converged
    assert all(b <= a for a, b in zip(fit.objective_history, fit.objective_history[1:]))


@settings(max_examples=25)
@given(st.floats(0.3e-6, 10e-6), st.floats(0.3e-6, 10e-6))
def test_recovery_from_any_start(g_true, g_start):
    truth = dataclasses.replace(P, air_gap_m=g_true)
    fit = fit_air_gap(synthetic(truth), dataclasses.replace(P, air_gap_m=g_start))
    assert fit.params.air_gap_m == pytest.approx(g_true, rel=1e-4)


def test_noisy_recovery_small_sample():
    ok = sum(
        abs(fit_air_gap(synthetic(P, 0.02, s), dataclasses.replace(P, air_gap_m=2e-6)).params.air_gap_m / 1e-6 - 1) <= 0.05
        for s in range(20)
    )
    assert ok >= 19


def test_joint_mu_fit_runs():
    fit = fit_air_gap(synthetic(P), dataclasses.replace(P, air_gap_m=1.5e-6), fit_mu=True)
    assert fit.rms_residual_Nm < 1e-6


@pytest.mark.parametrize("data", [
    [],
    [TorqueVoltagePoint(500.0, 0.2)] * 5,
    [TorqueVoltagePoint(0.0, 0.02)] * 4,
])
def test_degenerate_gap_data(data):
    with pytest.raises(FitError):
        fit_air_gap(data)


def test_gap_data_over_ceiling():
    data = synthetic(P) + [TorqueVoltagePoint(1500.0, 1.0)]
    with pytest.raises(FitError):
        fit_air_gap(data)


def test_loss_fit_reproduces_inputs():
    screw = LeadscrewSpec()
    loss = fit_loss_model(MEASURED_EFFICIENCY_POINTS, screw, negative="allow")
    for pt in MEASURED_EFFICIENCY_POINTS:
        assert abs(transmission_efficiency(screw, loss, pt.load_N) - pt.efficiency) < 1e-9
    assert loss == measured_loss_model()


def test_loss_fit_linear_solve_oracle():
    screw = LeadscrewSpec()
    F1, F2 = 0.2406 * 9.81, 2.27 * 9.81
    t1, t2 = (F * 0.014 / (2 * np.pi) for F in (F1, F2))
    r1, r2 = t1 * (1 / 0.877 - 1), t2 * (1 / 0.1309 - 1)
    b = (r2 - r1) / (F2 - F1)
    a = r1 - b * F1
    loss = measured_loss_model(screw)
    assert loss.coulomb_torque_Nm == pytest.approx(a, rel=1e-12)
    assert loss.load_coefficient_Nm_per_N == pytest.approx(b, rel=1e-12)


def test_negative_offset_policies():
    with pytest.raises(FitError):
        fit_loss_model(MEASURED_EFFICIENCY_POINTS, negative="error")
    clamped = fit_loss_model(MEASURED_EFFICIENCY_POINTS, negative="clamp")
    assert clamped.coulomb_torque_Nm == 0.0
    assert fit_loss_model(MEASURED_EFFICIENCY_POINTS, negative="allow").coulomb_torque_Nm < 0
    with pytest.raises(ValueError):
        fit_loss_model(MEASURED_EFFICIENCY_POINTS, negative="ignore")


@given(st.floats(1.0, 50.0), st.floats(0.0, 0.05), st.floats(0.0, 0.05))
def test_loss_fit_round_trip(F, a, b):
    screw = LeadscrewSpec()
    truth = FrictionLossModel(a, b)
    pts = [EfficiencyPoint(x, transmission_efficiency(screw, truth, x)) for x in (F, F + 10.0)]
    got = fit_loss_model(pts, screw)
    for pt in pts:
        assert transmission_efficiency(screw, got, pt.load_N) == pytest.approx(pt.efficiency, abs=1e-9)


def test_loss_fit_singular():
    with pytest.raises(FitError):
        fit_loss_model([EfficiencyPoint(5.0, 0.5), EfficiencyPoint(5.0, 0.4)])
    with pytest.raises(FitError):
        fit_loss_model([EfficiencyPoint(5.0, 0.5)])
