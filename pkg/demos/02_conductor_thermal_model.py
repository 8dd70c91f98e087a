"""
Conductor heat balance: from SI physics to a one-step map
=========================================================

A transmission line heats with the square of its loading and cools
against the air. This script builds the per-step thermal map for the
bundled 90 kV case and shows the numbers that matter: equilibrium
temperatures, the geometric approach to them, and the linearization
error budget the robust controller has to absorb.
"""

import numpy as np

from linetemp import thermal

# conductor hardware and weather for the bundled case
params = thermal.ConductorParams(
    mass_kg_per_m=0.627, heat_capacity_J_per_kgK=909.0,
    diameter_m=0.0196, resistance_ohm_per_m=1.15e-4,
    absorptivity=0.5, air_conductivity_W_per_mK=2.61e-2)
weather = thermal.WeatherSample(
    nusselt=34.0, ambient_C=20.0, solar_W_per_m2=10.0,
    reactive_VAr=5.0e6, voltage_V=90.0e3)

# the instantaneous heat balance in W/m at 30 C and 70 MW
P_J, P_S, P_C = thermal.heating_terms(30.0, 70.0, params, weather)
print(f"joule {P_J:.3f}  solar {P_S:.3f}  convective {P_C:.3f}  W/m")

# fold physics + weather + time step into three per-step coefficients:
# T+ = (1 - beta) T + alpha_tilde (F W)^2 + gamma
c = thermal.coefficients(params, weather, dt_s=60.0)
print(f"\nbeta  {c.beta:.6f}   (cooling fraction per minute)")
print(f"alpha {thermal.alpha_tilde_MW(c):.6e} K/MW^2 per step")
print(f"gamma {c.gamma:.4f} K per step")

# equilibria: where heating balances cooling
for F in (70.0, 78.0, 144.86):
    print(f"T_eq({F:7.2f} MW) = {thermal.equilibrium_temperature(F, c):.4f} C")

# step the nonlinear map from a hot start: the deviation from
# equilibrium shrinks by exactly (1 - beta) every minute
T_eq = thermal.equilibrium_temperature(70.0, c)
T = 45.0
print("\nminute  temperature  deviation/last")
last = T - T_eq
for k in range(1, 6):
    T = thermal.step_nonlinear(T, 70.0, c)
    print(f"{k:6d}  {T:10.4f}  {(T - T_eq) / last:.6f}")
    last = T - T_eq

# the controller predicts with a linear model; this is the certified
# worst one-step temperature error inside the trust region
lp = thermal.LinearizationPoint(70.0, T_eq)
bound = thermal.linearization_error_bound(7.0, 15.0, lp, c, l_batt=0.36)
print(f"\nlinearization error bound (|F~|<=7 MW, battery 15 MW):"
      f" {bound:.6f} K/step")
