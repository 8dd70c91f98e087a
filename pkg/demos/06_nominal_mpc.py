"""
The nominal QP and the tube law
===============================

Each minute the controller solves one quadratic program for the
cheapest feasible plan, then applies the tube law: the plan's first
move plus K times the gap between measurement and plan. Three scenes:
a benign state (the controller does not fidget), a forecast ramp (it
acts before anything is violated), and a full battery (the energy
chain forces a discharge schedule).
"""

import numpy as np

from linetemp import mpc, scenario

scn, _ = scenario.load_scenario("scenarios/isle_jourdain.scenario")
controller, _ = scenario.synthesize_controller(scn)
sys_m, lay = controller.sys, controller.sys.layout
cfg = controller.cfg
np.set_printoptions(precision=3, suppress=True)


def solve_at(x, affine=None):
    qp = mpc.build_qp(sys_m, controller.X_t, controller.U_t,
                      controller.omega, x, cfg, affine_terms=affine)
    return mpc.solve_qp(qp)


# ---- scene 1: a warm but harmless afternoon ---------------------------
x = np.zeros(lay.n)
x[lay.flow] = [4.0, 12.0]
x[lay.temp] = [1.0, 4.0]
x[lay.e_batt] = scn.E_init_MWh
sol = solve_at(x)
print("scene 1 - benign state")
print("  status:", sol.status, f" objective {sol.objective:.2e}",
      " first move:", sol.u_star[0])

# the tube law answers measurement jitter even when the plan is "rest":
# kappa = u*_0 + K (x - x*_0)
act = mpc.tube_law(sol, controller.gain, x, lay, scn.P_bar_MW)
x_off = x.copy()
x_off[lay.flow] += [0.5, 0.5]
act_off = mpc.tube_law(sol, controller.gain, x_off, lay, scn.P_bar_MW)
print("  kappa at the plan:  ", act.u)
print("  kappa after a +0.5 MW flow surprise:", act_off.u,
      " (K pulls back toward the plan)")

# ---- scene 2: a forecast ramp, handled before it bites ----------------
# the dispatcher announces +5.5 MW per minute on line 1; fed to the QP
# as known additive terms, it acts today although nothing is wrong yet
ramp = np.zeros((cfg.N, lay.n))
ramp[:, 0] = 5.5
x0 = np.zeros(lay.n)
x0[lay.e_batt] = scn.E_init_MWh
sol_r = solve_at(x0, affine=ramp)
print("\nscene 2 - forecast ramp on line 1 (+5.5 MW/min)")
print("  status:", sol_r.status, f" objective {sol_r.objective:.3f}")
print("  planned moves [battery, curtail 1, curtail 2]:")
print(np.array_str(sol_r.u_star, precision=3))
print("  planned line-1 flow deviation:",
      np.round(sol_r.x_star[1:, 0], 2), "\n  (envelope cap:",
      round(float(controller.X_t.upper[0]), 2), "MW)")

# ---- scene 3: the battery is nearly full while charging ---------------
x_full = np.zeros(lay.n)
x_full[lay.u_batt] = 14.0                # charging hard
x_full[lay.e_batt] = 29.5                # store nearly at its 30 MWh cap
sol_e = solve_at(x_full)
print("\nscene 3 - full store, charging at 14 MW")
print("  status:", sol_e.status)
print("  planned battery rate changes:", sol_e.u_star[:, 0])
u_path = 14.0 + np.cumsum(sol_e.u_star[:, 0])
E_path = 29.5 + np.cumsum(u_path) * scn.dt_s / 3600.0
print("  battery power along the plan:", np.round(u_path, 3))
print("  stored energy along the plan:", np.round(E_path, 3),
      " (cap", scn.E_max_MWh, "MWh)")
