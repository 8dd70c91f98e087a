"""Conductor heat-balance physics.

Nonlinear plant step, per-step coefficient extraction (alpha_tilde, beta,
gamma), equilibrium temperature, heating-term diagnostics, and the
linearization error bound used to size the temperature disturbance set.

Units: flows in MW and temperatures in degC at every interface; conversion
to SI watts happens in exactly one place (``_mw_to_w``).
"""

from dataclasses import dataclass

import numpy as np

_MW = 1e6  # W per MW; the single MW -> W conversion point


def _mw_to_w(flow_MW):
    return np.asarray(flow_MW, dtype=float) * _MW


@dataclass(frozen=True)
class ConductorParams:
    """Per-unit-length conductor characteristics (SI units)."""
    mass_kg_per_m: float
    heat_capacity_J_per_kgK: float
    diameter_m: float
    resistance_ohm_per_m: float
    absorptivity: float
    air_conductivity_W_per_mK: float

    def __post_init__(self):
        for name in ("mass_kg_per_m", "heat_capacity_J_per_kgK", "diameter_m",
                     "resistance_ohm_per_m", "absorptivity",
                     "air_conductivity_W_per_mK"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.2 <= self.absorptivity <= 0.9:
            raise ValueError("absorptivity must lie in [0.2, 0.9]")


@dataclass(frozen=True)
class WeatherSample:
    """Weather and electrical operating data frozen for a scenario."""
    nusselt: float
    ambient_C: float
    solar_W_per_m2: float
    reactive_VAr: float
    voltage_V: float

    def __post_init__(self):
        if self.nusselt <= 0.0:
            raise ValueError("nusselt must be strictly positive")
        if self.voltage_V <= 0.0:
            raise ValueError("voltage_V must be strictly positive")
        if self.solar_W_per_m2 < 0.0:
            raise ValueError("solar_W_per_m2 must be nonnegative")


@dataclass(frozen=True)
class ThermalCoefficients:
    """Discrete-time heat-balance coefficients for one time step.

    alpha_tilde in K/W^2 per step, beta dimensionless per step, gamma in
    K per step.
    """
    alpha_tilde: float
    beta: float
    gamma: float
    dt_s: float

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie strictly in (0, 1)")
        if self.alpha_tilde <= 0.0:
            raise ValueError("alpha_tilde must be strictly positive")


@dataclass(frozen=True)
class LinearizationPoint:
    """Flow operating point and its equilibrium temperature for one line."""
    F0_MW: float
    T0_C: float

    def __post_init__(self):
        if self.F0_MW < 1.0:
            raise ValueError("F0_MW must be at least 1 MW "
                             "(temperature-flow bijection requires it)")


def coefficients(p, w, dt_s):
    """Discrete coefficients of T' = (1-beta) T + alpha_tilde (F+dF)^2 + gamma."""
    if dt_s <= 0.0:
        raise ValueError("dt_s must be strictly positive")
    mc = p.mass_kg_per_m * p.heat_capacity_J_per_kgK
    three_v_sq = 3.0 * w.voltage_V ** 2
    beta = np.pi * p.air_conductivity_W_per_mK * w.nusselt * dt_s / mc
    if beta >= 1.0:
        raise ValueError("time step too large for explicit recursion")
    alpha_tilde = p.resistance_ohm_per_m * dt_s / (three_v_sq * mc)
    gamma = (dt_s / mc) * (
        p.absorptivity * p.diameter_m * w.solar_W_per_m2
        + np.pi * p.air_conductivity_W_per_mK * w.nusselt * w.ambient_C
        + p.resistance_ohm_per_m * w.reactive_VAr ** 2 / three_v_sq)
    return ThermalCoefficients(alpha_tilde=float(alpha_tilde), beta=float(beta),
                               gamma=float(gamma), dt_s=float(dt_s))


def step_nonlinear(T, F_MW, coeffs, batt_flow_delta_MW=0.0, w_temp=0.0):
    """One exact plant step: T' = (1-beta) T + alpha_tilde (F + dF)^2 + gamma + w.

    This is the truth model the simulator advances; no linearization.
    Accepts scalars or per-line arrays.
    """
    flow_w = _mw_to_w(np.asarray(F_MW, dtype=float)
                      + np.asarray(batt_flow_delta_MW, dtype=float))
    out = ((1.0 - coeffs.beta) * np.asarray(T, dtype=float)
           + coeffs.alpha_tilde * flow_w ** 2 + coeffs.gamma
           + np.asarray(w_temp, dtype=float))
    return float(out) if out.ndim == 0 else out


def equilibrium_temperature(F_MW, coeffs):
    """Unique fixed point of step_nonlinear at constant flow."""
    flow_w = _mw_to_w(F_MW)
    out = (coeffs.alpha_tilde * flow_w ** 2 + coeffs.gamma) / coeffs.beta
    return float(out) if out.ndim == 0 else out


def heating_terms(T, F_MW, p, w):
    """Joule heating, solar heating and convective cooling in W/m.

    P_J = R I^2 with I^2 = (F^2 + Q0^2)/(3 V0^2); P_S = alpha_s D I_T;
    P_C = pi lambda_f Nu (T - T_a).
    """
    current_sq = (_mw_to_w(F_MW) ** 2 + w.reactive_VAr ** 2) / (3.0 * w.voltage_V ** 2)
    P_J = p.resistance_ohm_per_m * current_sq
    P_S = p.absorptivity * p.diameter_m * w.solar_W_per_m2
    P_C = (np.pi * p.air_conductivity_W_per_mK * w.nusselt
           * (np.asarray(T, dtype=float) - w.ambient_C))
    if np.ndim(P_C) == 0 and np.ndim(P_J) == 0:
        return float(P_J), float(P_S), float(P_C)
    return P_J, P_S, P_C


def alpha_tilde_MW(coeffs):
    """alpha_tilde expressed per MW^2 instead of per W^2 (degC/MW^2/step)."""
    return coeffs.alpha_tilde * _MW ** 2


def linearization_error_bound(F_dev_max_MW, batt_max_MW, lp, coeffs, l_batt=1.0):
    """Bound on |nonlinear - linearized| one-step temperature error, degC.

    alpha_tilde (F_dev_max + |l_batt| batt_max)^2: the dropped quadratic
    term, maximized over the declared deviation domain. ``l_batt`` is the
    battery PTDF on the line; the default 1.0 is the conservative PTDF
    ceiling.
    """
    if F_dev_max_MW < 0.0:
        raise ValueError("F_dev_max_MW must be nonnegative")
    if batt_max_MW < 0.0:
        raise ValueError("batt_max_MW must be nonnegative")
    dev_w = _mw_to_w(F_dev_max_MW + abs(l_batt) * batt_max_MW)
    return float(coeffs.alpha_tilde * dev_w ** 2)
