"""Shared construction of the Isle Jourdain test case for unit tests.

Mirrors the bundled scenario file's numbers; tests that exercise the
YAML/CLI path load the scenario file instead.
"""

import warnings

import numpy as np

from linetemp import grid, ltimodel, robust, thermal

DT_S = 60.0
F0_MW = (70.0, 78.0)
T_MAX_C = 55.7
W_FLOW_MW = 0.1
W_TEMP_C = 0.05
BATT_POWER_MW = 15.0
BATT_ENERGY_MWH = 30.0
CURT_CAP_MW = (30.0, 30.0)
CURT_RATE_MW = (10.0, 10.0)
FLOW_ENVELOPE_MW = 48.0
COUPLED_POLES = (0.7, 0.9, 0.45, 0.21)


def conductor():
    return thermal.ConductorParams(
        mass_kg_per_m=0.627, heat_capacity_J_per_kgK=909.0, diameter_m=0.0196,
        resistance_ohm_per_m=1.15e-4, absorptivity=0.5,
        air_conductivity_W_per_mK=2.61e-2)


def weather():
    return thermal.WeatherSample(nusselt=34.0, ambient_C=20.0,
                                 solar_W_per_m2=10.0, reactive_VAr=5e6,
                                 voltage_V=90e3)


def network():
    return grid.NetworkModel(
        line_names=["Isle Jourdain - Bellac", "Bellac - Maureix"],
        curtail_site_names=["Isle Jourdain", "Bellac"],
        battery_node="Isle Jourdain",
        L_batt=[0.36, 0.36],
        L_curt=[[-0.36, -0.38], [-0.36, -0.62]],
        slack_bus="Eguzon")


def build_system(w_flow=W_FLOW_MW, w_temp=W_TEMP_C):
    net = network()
    c = thermal.coefficients(conductor(), weather(), DT_S)
    lps = tuple(
        thermal.LinearizationPoint(F0, thermal.equilibrium_temperature(F0, c))
        for F0 in F0_MW)
    lin_bounds = np.array([
        thermal.linearization_error_bound(0.1 * lp.F0_MW, BATT_POWER_MW, lp, c,
                                          l_batt=lb)
        for lp, lb in zip(lps, net.L_batt)])
    sys = ltimodel.build_lti(net, (c, c), lps, DT_S, w_flow, w_temp, lin_bounds)
    return net, c, lps, sys


def build_tube(w_flow=W_FLOW_MW, w_temp=W_TEMP_C):
    net, c, lps, sys = build_system(w_flow, w_temp)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)   # expected delay-pole perturbation
        poles = robust.resolve_poles(COUPLED_POLES, net.n_lines, net.n_sites)
    gain = robust.synthesize_gain(sys, poles)
    A_c, B_c, w_c, _ = ltimodel.core_subsystem(sys)
    A_K = A_c + B_c @ gain.K_core
    omega = robust.kofman_rpi(A_K, np.eye(len(w_c)), w_c)
    return net, c, lps, sys, gain, omega


def scenario_boxes(lps):
    """State/control boxes in the model's mixed coordinates."""
    from linetemp import polytope
    T0 = np.array([lp.T0_C for lp in lps])
    inf = np.inf
    X = polytope.Box(
        lower=np.r_[-FLOW_ENVELOPE_MW, -FLOW_ENVELOPE_MW, 0.0 - T0,
                    -BATT_POWER_MW, 0.0, [-inf, -inf], 0.0, 0.0],
        upper=np.r_[FLOW_ENVELOPE_MW, FLOW_ENVELOPE_MW, T_MAX_C - T0,
                    BATT_POWER_MW, BATT_ENERGY_MWH, [inf, inf],
                    CURT_CAP_MW[0], CURT_CAP_MW[1]])
    U = polytope.Box.symmetric([BATT_POWER_MW, *CURT_RATE_MW])
    return X, U


def build_controller(w_flow=W_FLOW_MW, w_temp=W_TEMP_C):
    """Everything the closed loop needs: tube + tightened sets."""
    net, c, lps, sys, gain, omega = build_tube(w_flow, w_temp)
    X, U = scenario_boxes(lps)
    X_t, U_t = robust.tightened_boxes(X, U, gain, omega, sys.layout)
    return dict(net=net, coeffs=c, lps=lps, sys=sys, gain=gain, omega=omega,
                X=X, U=U, X_t=X_t, U_t=U_t)


RAMP_MW_PER_MIN = (0.7, 2.0)
RAMP_DURATION_STEPS = 35
E_INIT_MWH = 15.0


def ramp_table(steps=RAMP_DURATION_STEPS, rates=RAMP_MW_PER_MIN):
    """Per-step exogenous flow increments of the stress scenario."""
    return np.tile(np.asarray(rates, dtype=float) * DT_S / 60.0, (steps, 1))


def tube_controller(ctl=None, N=10):
    """Bundle a build_controller() dict into a sim.TubeController."""
    from linetemp import mpc, sim
    if ctl is None:
        ctl = build_controller()
    return sim.TubeController(sys=ctl["sys"], gain=ctl["gain"],
                              omega=ctl["omega"], X=ctl["X"], U=ctl["U"],
                              X_t=ctl["X_t"], U_t=ctl["U_t"],
                              cfg=mpc.MpcConfig(N=N),
                              P_bar_MW=BATT_POWER_MW)


def plant_model(ramp=None, ctl=None):
    """sim.PlantModel for the test network (optionally with the ramp)."""
    from linetemp import sim
    if ctl is None:
        ctl = build_controller()
    return sim.PlantModel(net=ctl["net"], coeffs=(ctl["coeffs"],) * 2,
                          lps=tuple(ctl["lps"]), dt_s=DT_S,
                          T_limit_C=np.full(2, T_MAX_C),
                          P_bar_MW=BATT_POWER_MW,
                          E_min_MWh=0.0, E_max_MWh=BATT_ENERGY_MWH,
                          E_init_MWh=E_INIT_MWH,
                          F_init_MW=np.array(F0_MW), ramp_MW=ramp)


def disturbance_box():
    from linetemp import polytope
    return polytope.Box.symmetric([W_FLOW_MW, W_FLOW_MW,
                                   W_TEMP_C, W_TEMP_C])
