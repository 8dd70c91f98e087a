"""
The 10-state prediction model
=============================

The controller predicts with one linear system stitched from the
network and thermal pieces: per-line flow and temperature deviations,
battery power and energy, and a delay register plus a cumulative level
for each curtailment site. This script assembles it for the bundled
case and pokes at the structure worth knowing.
"""

import numpy as np

from linetemp import ltimodel, scenario

scn, _ = scenario.load_scenario("scenarios/isle_jourdain.scenario")
net, coeffs, lps, sys_m = scenario.system_matrices(scn)
lay = sys_m.layout

print("state dimension:", lay.n, " control channels:", lay.n_u)
print("blocks: flow", lay.flow, " temp", lay.temp,
      " u_batt", lay.u_batt, " e_batt", lay.e_batt,
      "\n        d_curt", lay.d_curt, " l_curt", lay.l_curt)

# the A matrix encodes the physics: temperatures remember (1 - beta),
# heat in proportion to flow, and flows react to the delayed
# curtailment register
np.set_printoptions(precision=4, suppress=True, linewidth=120)
print("\nA =\n", sys_m.A)
print("\nB =\n", sys_m.B)

# w_bar is the per-state disturbance budget the tube must absorb:
# measured noise on flows, noise + linearization error on temperatures,
# exactly zero on the bookkeeping integrators
print("\nw_bar =", sys_m.w_bar)

# a curtailment command needs two steps to reach the flow: first it
# lands in the delay register, then the PTDFs apply it
x = np.zeros(lay.n)
u = np.array([0.0, 5.0, 0.0])            # curtail 5 MW at site 1
x1 = sys_m.A @ x + sys_m.B @ u
x2 = sys_m.A @ x1
print("\nflows after 1 step:", x1[lay.flow], " (register:", x1[lay.d_curt], ")")
print("flows after 2 steps:", x2[lay.flow], " (level:", x2[lay.l_curt], ")")

# the tube design runs on the 6-state controllable core; the battery
# power/energy and curtailment levels are anchored by exact measurement
A_c, B_c, w_c, core = ltimodel.core_subsystem(sys_m)
print("\ndesign core states:", core, " core disturbance:", w_c)
