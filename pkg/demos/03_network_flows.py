"""
Network model: PTDF sensitivities and actuator reach
====================================================

Power flow on the monitored corridor responds linearly to nodal
injections through PTDFs. The battery injects; curtailment removes
generation (one step delayed). This script loads the bundled network
and traces how each actuator moves the two line flows.
"""

import numpy as np

from linetemp import grid, scenario

scn, _ = scenario.load_scenario("scenarios/isle_jourdain.scenario")
net = scenario.network_model(scn)

print("lines:", scn.line_names)
print("battery sensitivity L_batt:", net.L_batt)
print("curtailment sensitivity L_curt (per line x site):\n", net.L_curt)

# discharging the battery by 10 MW *raises* both flows through the 0.36
# PTDFs; curtailing generation lowers them (note the sign built into
# L_curt: curtailment is a negative injection)
F = np.array([0.0, 0.0])                 # deviations from linearization
print("\nbattery +10 MW:",
      grid.flow_update(net, F, 10.0, [0.0, 0.0], [0.0, 0.0]))
print("curtail site 2 by 10 MW:",
      grid.flow_update(net, F, 0.0, [0.0, 10.0], [0.0, 0.0]))

# the disturbance term rides along additively
print("with +-0.1 MW noise:",
      grid.flow_update(net, F, 0.0, [0.0, 10.0], [0.1, -0.1]))

# reach check: what each actuator can do at full scale
full_batt = net.L_batt * scn.P_bar_MW
full_curt = net.L_curt @ [s.cap_MW for s in scn.sites]
print("\nbattery swing at 15 MW:", full_batt, "MW on each line")
print("curtailment swing at both caps:", full_curt, "MW on each line")
