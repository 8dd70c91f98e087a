"""PTDF-based local network model and DC flow update.

Flows respond linearly to injection changes through fixed power transfer
distribution factors. The sign convention is fixed at load time: positive
curtailment means power removed, so curtailment PTDF columns are negated
once in ``load_network`` and every later update is a plain sum.
"""

import numpy as np


class NetworkModel:
    """Immutable PTDF sensitivities for the monitored corridor.

    Parameters
    ----------
    line_names : sequence of str, length n_l
    curtail_site_names : sequence of str, length n_g
    battery_node : str
    L_batt : array (n_l,)
        MW flow change per MW of battery injection.
    L_curt : array (n_l, n_g)
        MW flow change per MW of curtailment (already negated: positive
        curtailment lowers flow on positively-coupled lines).
    slack_bus : str
        Metadata only.
    """

    def __init__(self, line_names, curtail_site_names, battery_node,
                 L_batt, L_curt, slack_bus):
        self.line_names = tuple(str(n) for n in line_names)
        self.curtail_site_names = tuple(str(n) for n in curtail_site_names)
        self.battery_node = str(battery_node)
        self.slack_bus = str(slack_bus)
        L_batt = np.asarray(L_batt, dtype=float)
        L_curt = np.asarray(L_curt, dtype=float)
        n_l, n_g = len(self.line_names), len(self.curtail_site_names)
        if n_l < 1:
            raise ValueError("at least one line is required")
        if L_batt.shape != (n_l,):
            raise ValueError(f"L_batt must have shape ({n_l},), got {L_batt.shape}")
        if L_curt.shape != (n_l, n_g):
            raise ValueError(
                f"L_curt must have shape ({n_l}, {n_g}), got {L_curt.shape}")
        for name, arr in (("L_batt", L_batt), ("L_curt", L_curt)):
            if arr.size and np.max(np.abs(arr)) > 1.0:
                raise ValueError(f"{name} has PTDF entries outside [-1, 1]")
        self.L_batt = L_batt
        self.L_curt = L_curt
        self.L_batt.setflags(write=False)
        self.L_curt.setflags(write=False)

    @property
    def n_lines(self):
        return len(self.line_names)

    @property
    def n_sites(self):
        return len(self.curtail_site_names)

    def __repr__(self):
        return (f"NetworkModel({self.n_lines} lines, {self.n_sites} "
                f"curtailment sites, battery at {self.battery_node!r})")


def flow_update(network, F, d_batt, d_curt_effective, w_flow):
    """Next per-line flows after one injection change.

    F' = F + L_batt * d_batt + L_curt @ d_curt_effective + w_flow, all MW.
    ``d_curt_effective`` is the delayed curtailment delta (>= 0 means power
    removed); the sign is already inside L_curt.
    """
    F = np.asarray(F, dtype=float)
    d_curt = np.asarray(d_curt_effective, dtype=float)
    w = np.asarray(w_flow, dtype=float)
    n_l, n_g = network.n_lines, network.n_sites
    if F.shape != (n_l,):
        raise ValueError(f"F must have shape ({n_l},), got {F.shape}")
    if d_curt.shape != (n_g,):
        raise ValueError(
            f"d_curt_effective must have shape ({n_g},), got {d_curt.shape}")
    if w.shape != (n_l,):
        raise ValueError(f"w_flow must have shape ({n_l},), got {w.shape}")
    return F + network.L_batt * float(d_batt) + network.L_curt @ d_curt + w


def load_network(config):
    """Build a NetworkModel from a validated ScenarioConfig.

    Curtailment PTDF columns are negated here (positive curtailment =
    power removed) so that flow_update stays a plain sum.
    """
    line_names = [line.name for line in config.lines]
    if len(set(line_names)) != len(line_names):
        raise ValueError("duplicate line name in scenario")
    nodes = set(config.nodes)
    for label, node in [("battery", config.battery.node),
                        ("slack_bus", config.slack_bus)]:
        if node not in nodes:
            raise ValueError(f"unknown node reference in {label}: {node!r}")
    for site in config.curtailment_sites:
        if site.node not in nodes:
            raise ValueError(
                f"unknown node reference in curtailment site: {site.node!r}")
    site_names = [site.node for site in config.curtailment_sites]
    if len(set(site_names)) != len(site_names):
        raise ValueError("duplicate curtailment site in scenario")

    L_batt = np.asarray(config.battery.ptdf, dtype=float)
    n_l = len(line_names)
    if L_batt.shape != (n_l,):
        raise ValueError("battery PTDF length must match line count")
    cols = []
    for site in config.curtailment_sites:
        col = np.asarray(site.ptdf, dtype=float)
        if col.shape != (n_l,):
            raise ValueError(
                f"PTDF length for site {site.node!r} must match line count")
        cols.append(-col)
    L_curt = (np.column_stack(cols) if cols else np.zeros((n_l, 0)))
    return NetworkModel(line_names, site_names, config.battery.node,
                        L_batt, L_curt, config.slack_bus)
