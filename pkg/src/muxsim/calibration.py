"""Parameter fitting: clutch air gap (and friction) from torque-voltage data,
and the two-parameter friction loss model from measured efficiencies."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .clutch import ClutchParams, capstan_gain
from .drivetrain import FrictionLossModel, LeadscrewSpec, ideal_lift_torque

MAX_ITERATIONS = 1000
PARAM_RTOL = 1e-10
MU_MAX = 10.0


class FitError(RuntimeError):
    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class TorqueVoltagePoint:
    voltage_V: float
    holding_torque_Nm: float

    def __post_init__(self):
        if self.voltage_V < 0 or self.holding_torque_Nm < 0:
            raise ValueError("voltage and torque must be >= 0")


@dataclass(frozen=True)
class EfficiencyPoint:
    load_N: float
    efficiency: float
    shaft_rpm: float = 0.0

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")
        if self.load_N < 0:
            raise ValueError("load_N must be >= 0")


@dataclass
class GapFitReport:
    params: ClutchParams
    rms_residual_Nm: float
    iterations: int
    converged: bool
    objective_history: list[float] = field(default_factory=list)


# Light and heavy single-unit measurements (240.6 g at 35 rpm, 2.27 kg at 40 rpm).
MEASURED_EFFICIENCY_POINTS = (
    EfficiencyPoint(0.2406 * 9.81, 0.877, 35.0),
    EfficiencyPoint(2.27 * 9.81, 0.1309, 40.0),
)


def holding_torque_curve(p: ClutchParams, voltages) -> np.ndarray:
    """Vectorised forward model of holding torque versus voltage."""
    v = np.asarray(voltages, dtype=float)
    d, g = p.dielectric_thickness_m, p.air_gap_m
    ed, eg = p.rel_permittivity_dielectric, p.rel_permittivity_gap
    bracket = (eg * ed / (d * eg + g * ed)) ** 2 + (eg / g) ** 2
    r = p.shaft_radius_m
    k = r * r * p.electrode_width_m * 0.5 * p.vacuum_permittivity_F_per_m
    return p.pretension_torque_Nm + k * v**2 * bracket * capstan_gain(p)


def _gap_model(p: ClutchParams, v2: np.ndarray, log_g: float, mu: float):
    """Torque and partial derivatives w.r.t. (log g, mu)."""
    g = math.exp(log_g)
    d = p.dielectric_thickness_m
    ed, eg = p.rel_permittivity_dielectric, p.rel_permittivity_gap
    den = d * eg + g * ed
    bracket = (eg * ed / den) ** 2 + (eg / g) ** 2
    dbracket_dg = -2.0 * (eg * ed) ** 2 * ed / den**3 - 2.0 * eg**2 / g**3
    r = p.shaft_radius_m
    k = r * r * p.electrode_width_m * 0.5 * p.vacuum_permittivity_F_per_m
    theta = p.wrap_angle_rad
    gain = math.expm1(mu * theta)
    base = k * v2
    torque = p.pretension_torque_Nm + base * bracket * gain
    d_logg = base * dbracket_dg * g * gain
    d_mu = base * bracket * theta * math.exp(mu * theta)
    return torque, d_logg, d_mu


def fit_air_gap(
    data: Sequence[TorqueVoltagePoint],
    p0: ClutchParams | None = None,
    fit_mu: bool = False,
) -> GapFitReport:
    """Least-squares estimate of the air gap (and optionally mu).

    Projected Levenberg-Marquardt in (log g, mu): steps are clipped to the
    bounds 0 < g < dielectric thickness, 0 <= mu <= MU_MAX and accepted only
    when they lower the sum of squares. Fitting mu jointly is poorly
    conditioned because g and mu both mostly scale the same term.
    """
    p0 = p0 or ClutchParams()
    if len(data) < 3:
        raise FitError("need at least 3 torque-voltage points")
    v = np.array([pt.voltage_V for pt in data], dtype=float)
    y = np.array([pt.holding_torque_Nm for pt in data], dtype=float)
    if np.all(v == 0) or len(np.unique(v)) < 2:
        raise FitError("degenerate data: voltages must span at least two distinct values")
    if v.max() > p0.voltage_ceiling_V:
        raise FitError("data voltage exceeds the breakdown guard")
    v2 = v**2

    d = p0.dielectric_thickness_m
    lo = np.array([math.log(d * 1e-9), 0.0])
    hi = np.array([math.log(d) - 1e-9, MU_MAX])
    x = np.array([math.log(p0.air_gap_m), p0.friction_coefficient])
    x = np.clip(x, lo, hi)
    free = [0, 1] if fit_mu else [0]

    def evaluate(xv):
        t, j0, j1 = _gap_model(p0, v2, xv[0], xv[1])
        r = t - y
        jac = np.column_stack([j0, j1])[:, free]
        return r, jac, float(r @ r)

    r, J, S = evaluate(x)
    history = [S]
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, MAX_ITERATIONS + 1):
        grad = J.T @ r
        H = J.T @ J
        scale = np.diag(H).copy()
        scale[scale == 0] = 1.0
        accepted = False
        while lam < 1e20:
            try:
                step = np.linalg.solve(H + lam * np.diag(scale), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = x.copy()
            trial[free] = np.clip(x[free] + step, lo[free], hi[free])
            r_t, J_t, S_t = evaluate(trial)
            if S_t < S:
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            # no descent direction left within machine precision
            converged = True
            break
        change = np.abs(trial - x)
        rel = np.array([change[0], change[1] / max(abs(trial[1]), 1e-300)])[free]
        x, r, J, S = trial, r_t, J_t, S_t
        history.append(S)
        lam = max(lam / 3.0, 1e-12)
        if np.all(rel <= PARAM_RTOL) or S == 0.0:
            converged = True
            break

    fitted = replace(p0, air_gap_m=math.exp(x[0]), friction_coefficient=float(x[1]))
    report = GapFitReport(fitted, math.sqrt(S / len(y)), it, converged, history)
    if not converged:
        raise FitError(f"air-gap fit did not converge in {MAX_ITERATIONS} iterations", report)
    return report


def fit_loss_model(
    points: Sequence[EfficiencyPoint],
    screw: LeadscrewSpec | None = None,
    negative: str = "error",
) -> FrictionLossModel:
    """Solve for (coulomb, load_coefficient) reproducing measured efficiencies.

    Steady efficiency is ``ideal / (ideal + coulomb + coeff * load)``, which is
    linear in the two unknowns once rearranged. Exact for two points, least
    squares beyond. ``negative`` selects what happens when the solution has a
    negative entry: "error", "clamp" to zero, or "allow" a negative offset
    (the load coefficient must still be >= 0).
    """
    screw = screw or LeadscrewSpec()
    if negative not in ("error", "clamp", "allow"):
        raise ValueError("negative must be 'error', 'clamp' or 'allow'")
    if len(points) < 2:
        raise FitError("need at least 2 efficiency points")
    loads = np.array([pt.load_N for pt in points], dtype=float)
    if len(np.unique(loads)) < 2:
        raise FitError("singular system: efficiency points need distinct loads")
    eff = np.array([pt.efficiency for pt in points], dtype=float)
    ideal = np.array([ideal_lift_torque(screw, F) for F in loads])
    A = np.column_stack([np.ones_like(loads), loads])
    rhs = ideal * (1.0 / eff - 1.0)
    if len(points) == 2:
        sol = np.linalg.solve(A, rhs)
    else:
        sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    a, b = float(sol[0]), float(sol[1])
    # solutions that are zero up to roundoff should not trip the sign policy
    eps = 1e-12 * max(float(np.max(np.abs(rhs))), 1e-300)
    a = 0.0 if -eps < a < 0 else a
    b = 0.0 if -eps / max(float(loads.max()), 1e-300) < b < 0 else b
    if a < 0 or b < 0:
        msg = f"infeasible loss model: coulomb={a:.6g} N*m, load_coefficient={b:.6g} N*m/N"
        if negative == "error" or (negative == "allow" and b < 0):
            raise FitError(msg, FrictionLossModel(max(a, 0.0), max(b, 0.0)))
        if negative == "clamp":
            a, b = max(a, 0.0), max(b, 0.0)
    return FrictionLossModel(a, b)


@functools.lru_cache(maxsize=None)
def measured_loss_model(screw: LeadscrewSpec | None = None) -> FrictionLossModel:
    """Loss model fitted to the light/heavy single-unit efficiencies."""
    return fit_loss_model(MEASURED_EFFICIENCY_POINTS, screw or LeadscrewSpec(), negative="allow")
