"""Scenario files: schema, validation, and model builders.

A scenario is the reproducibility unit of this package: one structured
text file (YAML, ``format_version: "1"``) carries the network, conductor
physics, weather, constraint, disturbance, controller, and simulation
blocks. Validation collects *all* problems before any computation and
reports them together.

The builders at the bottom turn a validated ScenarioConfig into the
model objects the rest of the library consumes (NetworkModel, thermal
coefficients, LTI system, constraint boxes, plant, tube controller).
"""

import hashlib
import warnings
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
import yaml

from . import grid, ltimodel, mpc, polytope, robust, sim, thermal

FORMAT_VERSION = "1"

# fraction of F0 the linearization error certificate covers; flows may
# leave this trust region (up to the flow envelope), in which case the
# tube certificate is empirical rather than formal
TRUST_FRACTION = 0.1


class ScenarioError(ValueError):
    """Validation failure carrying every collected problem."""

    def __init__(self, errors):
        self.errors = tuple(errors)
        super().__init__("scenario validation failed:\n  - "
                         + "\n  - ".join(self.errors))


@dataclass(frozen=True)
class CurtailmentSite:
    node: str
    ptdf: tuple
    cap_MW: float
    rate_max_MW: float


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario contents (per-line tuples throughout)."""
    name: str
    format_version: str
    nodes: tuple
    slack_bus: str
    line_names: tuple
    flow0_MW: tuple
    temp_max_C: tuple
    battery_node: str
    battery_ptdf: tuple
    sites: tuple
    conductors: tuple         # ConductorParams per line
    weather: tuple            # WeatherSample per line
    P_bar_MW: float
    E_min_MWh: float
    E_max_MWh: float
    E_init_MWh: float
    flow_envelope_MW: float
    w_flow_MW: float
    w_temp_C: float
    dt_s: float
    N: int
    Q_cost: tuple
    poles: tuple
    theta: float
    steps: int
    seed: int
    disturbance_mode: str
    ramp_MW_per_min: tuple
    ramp_duration_steps: int
    F_init_MW: tuple
    T_init_C: tuple           # () -> equilibrium at F_init

    @property
    def n_lines(self):
        return len(self.line_names)

    @property
    def n_sites(self):
        return len(self.sites)


# ------------------------------------------------------------- validation

def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


class _Reader:
    """Mapping reader that records problems instead of raising."""

    def __init__(self, errors):
        self.errors = errors

    def block(self, d, key, path):
        v = d.get(key) if isinstance(d, dict) else None
        if not isinstance(v, dict):
            self.errors.append(f"{path}{key}: missing or not a mapping")
            return None
        return v

    def seq(self, d, key, path, min_len=1):
        v = d.get(key) if isinstance(d, dict) else None
        if not isinstance(v, list) or len(v) < min_len:
            self.errors.append(
                f"{path}{key}: missing or not a list of at least {min_len}")
            return None
        return v

    def number(self, d, key, path, positive=False, nonnegative=False,
               default=None):
        v = d.get(key) if isinstance(d, dict) else None
        if v is None and default is not None:
            return float(default)
        if not _num(v):
            self.errors.append(f"{path}{key}: missing or not a number")
            return None
        if positive and v <= 0:
            self.errors.append(f"{path}{key}: must be positive, got {v}")
            return None
        if nonnegative and v < 0:
            self.errors.append(f"{path}{key}: must be nonnegative, got {v}")
            return None
        return float(v)

    def integer(self, d, key, path, minimum=None, default=None):
        v = d.get(key) if isinstance(d, dict) else None
        if v is None and default is not None:
            return int(default)
        if not isinstance(v, int) or isinstance(v, bool):
            self.errors.append(f"{path}{key}: missing or not an integer")
            return None
        if minimum is not None and v < minimum:
            self.errors.append(f"{path}{key}: must be >= {minimum}, got {v}")
            return None
        return int(v)

    def text(self, d, key, path, default=None):
        v = d.get(key) if isinstance(d, dict) else None
        if v is None and default is not None:
            return default
        if not isinstance(v, str) or not v:
            self.errors.append(f"{path}{key}: missing or not a string")
            return None
        return v

    def numbers(self, d, key, path, length=None):
        v = d.get(key) if isinstance(d, dict) else None
        if not isinstance(v, list) or not all(_num(x) for x in v):
            self.errors.append(f"{path}{key}: missing or not a number list")
            return None
        if length is not None and len(v) != length:
            self.errors.append(
                f"{path}{key}: expected {length} entries, got {len(v)}")
            return None
        return tuple(float(x) for x in v)

    def ptdf(self, d, key, path, length):
        v = self.numbers(d, key, path, length)
        if v is None:
            return None
        for i, x in enumerate(v):
            if abs(x) > 1.0:
                self.errors.append(
                    f"{path}{key}[{i}]: PTDF entries must lie in [-1, 1], "
                    f"got {x}")
        return v

    def extras(self, d, allowed, path):
        # A misspelled field must never silently fall back to a default:
        # for disturbance bounds that would certify against the wrong set.
        for key in d:
            if key not in allowed:
                self.errors.append(f"{path}{key}: unknown field")


def parse_scenario(data):
    """Validate a parsed mapping and return a ScenarioConfig.

    Raises ScenarioError listing every problem found.
    """
    errors = []
    r = _Reader(errors)
    if not isinstance(data, dict):
        raise ScenarioError(["top level: scenario must be a mapping"])

    version = data.get("format_version")
    if version != FORMAT_VERSION:
        errors.append(
            f"format_version: expected \"{FORMAT_VERSION}\", got {version!r}")
    name = r.text(data, "name", "")
    r.extras(data, {"format_version", "name", "network", "conductor",
                    "weather", "battery", "constraints", "disturbance",
                    "controller", "simulation"}, "")

    # --- network ----------------------------------------------------
    net = r.block(data, "network", "")
    nodes, slack, line_names, flow0, tmax = (), None, (), (), ()
    batt_node, batt_ptdf, sites = None, (), ()
    if net is not None:
        p = "network."
        r.extras(net, {"nodes", "slack_bus", "lines", "battery",
                       "curtailment_sites"}, p)
        nodes_l = r.seq(net, "nodes", p, min_len=2) or []
        nodes = tuple(str(n) for n in nodes_l)
        if len(set(nodes)) != len(nodes):
            errors.append(f"{p}nodes: duplicate node names")
        slack = r.text(net, "slack_bus", p)
        if slack is not None and nodes and slack not in nodes:
            errors.append(f"{p}slack_bus: unknown node {slack!r}")

        lines = r.seq(net, "lines", p) or []
        names, f0s, tms = [], [], []
        for i, ln in enumerate(lines):
            lp = f"{p}lines[{i}]."
            if not isinstance(ln, dict):
                errors.append(f"{p}lines[{i}]: not a mapping")
                continue
            r.extras(ln, {"name", "flow0_MW", "temp_max_C"}, lp)
            names.append(r.text(ln, "name", lp))
            f0s.append(r.number(ln, "flow0_MW", lp, positive=True))
            tms.append(r.number(ln, "temp_max_C", lp, positive=True))
        if None not in names and len(set(names)) != len(names):
            errors.append(f"{p}lines: duplicate line names")
        if all(v is not None for v in names + f0s + tms):
            line_names, flow0, tmax = tuple(names), tuple(f0s), tuple(tms)
        n_l = len(lines)

        batt = r.block(net, "battery", p)
        if batt is not None:
            bp = f"{p}battery."
            r.extras(batt, {"node", "ptdf"}, bp)
            batt_node = r.text(batt, "node", bp)
            if batt_node is not None and nodes and batt_node not in nodes:
                errors.append(f"{bp}node: unknown node {batt_node!r}")
            batt_ptdf = r.ptdf(batt, "ptdf", bp, n_l) or ()

        site_list = r.seq(net, "curtailment_sites", p) or []
        parsed_sites = []
        for i, st in enumerate(site_list):
            sp = f"{p}curtailment_sites[{i}]."
            if not isinstance(st, dict):
                errors.append(f"{p}curtailment_sites[{i}]: not a mapping")
                continue
            r.extras(st, {"node", "ptdf", "cap_MW", "rate_max_MW"}, sp)
            node = r.text(st, "node", sp)
            if node is not None and nodes and node not in nodes:
                errors.append(f"{sp}node: unknown node {node!r}")
            ptdf = r.ptdf(st, "ptdf", sp, n_l)
            cap = r.number(st, "cap_MW", sp, positive=True)
            rate = r.number(st, "rate_max_MW", sp, positive=True)
            if None not in (node, ptdf, cap, rate):
                parsed_sites.append(CurtailmentSite(node, ptdf, cap, rate))
        if len(parsed_sites) == len(site_list):
            if len({s.node for s in parsed_sites}) != len(parsed_sites):
                errors.append(f"{p}curtailment_sites: duplicate site nodes")
            sites = tuple(parsed_sites)

    n_l = len(line_names)

    # --- conductor / weather (shared blocks, expanded per line) ------
    conductors, weather_t = (), ()
    cond = r.block(data, "conductor", "")
    if cond is not None and n_l:
        p = "conductor."
        r.extras(cond, {"mass_kg_per_m", "heat_capacity_J_per_kgK",
                        "diameter_m", "resistance_ohm_per_m", "absorptivity",
                        "air_conductivity_W_per_mK"}, p)
        vals = dict(
            mass_kg_per_m=r.number(cond, "mass_kg_per_m", p, positive=True),
            heat_capacity_J_per_kgK=r.number(
                cond, "heat_capacity_J_per_kgK", p, positive=True),
            diameter_m=r.number(cond, "diameter_m", p, positive=True),
            resistance_ohm_per_m=r.number(
                cond, "resistance_ohm_per_m", p, positive=True),
            absorptivity=r.number(cond, "absorptivity", p, positive=True),
            air_conductivity_W_per_mK=r.number(
                cond, "air_conductivity_W_per_mK", p, positive=True))
        if all(v is not None for v in vals.values()):
            try:
                conductors = (thermal.ConductorParams(**vals),) * n_l
            except ValueError as ex:
                errors.append(f"conductor: {ex}")

    wx = r.block(data, "weather", "")
    if wx is not None and n_l:
        p = "weather."
        r.extras(wx, {"nusselt", "ambient_C", "solar_W_per_m2", "voltage_kV",
                      "reactive_MVAr"}, p)
        vals = dict(
            nusselt=r.number(wx, "nusselt", p, positive=True),
            ambient_C=r.number(wx, "ambient_C", p),
            solar_W_per_m2=r.number(wx, "solar_W_per_m2", p, nonnegative=True),
            voltage_kV=r.number(wx, "voltage_kV", p, positive=True),
            reactive_MVAr=r.number(wx, "reactive_MVAr", p, nonnegative=True))
        if all(v is not None for v in vals.values()):
            try:
                weather_t = (thermal.WeatherSample(
                    nusselt=vals["nusselt"], ambient_C=vals["ambient_C"],
                    solar_W_per_m2=vals["solar_W_per_m2"],
                    reactive_VAr=vals["reactive_MVAr"] * 1e6,
                    voltage_V=vals["voltage_kV"] * 1e3),) * n_l
            except ValueError as ex:
                errors.append(f"weather: {ex}")

    # --- battery store / constraints / disturbance -------------------
    P_bar = E_min = E_max = E_init = envelope = w_flow = w_temp = None
    batt_store = r.block(data, "battery", "")
    if batt_store is not None:
        p = "battery."
        r.extras(batt_store, {"power_max_MW", "energy_min_MWh",
                              "energy_max_MWh", "energy_init_MWh"}, p)
        P_bar = r.number(batt_store, "power_max_MW", p, positive=True)
        E_min = r.number(batt_store, "energy_min_MWh", p, nonnegative=True,
                         default=0.0)
        E_max = r.number(batt_store, "energy_max_MWh", p, positive=True)
        E_init = r.number(batt_store, "energy_init_MWh", p, nonnegative=True)
        if None not in (E_min, E_max, E_init) and not (
                E_min <= E_init <= E_max):
            errors.append(f"{p}energy_init_MWh: {E_init} outside "
                          f"[{E_min}, {E_max}]")

    cons = r.block(data, "constraints", "")
    if cons is not None:
        r.extras(cons, {"flow_envelope_MW"}, "constraints.")
        envelope = r.number(cons, "flow_envelope_MW", "constraints.",
                            positive=True)

    dist = r.block(data, "disturbance", "")
    if dist is not None:
        r.extras(dist, {"flow_MW", "temp_C"}, "disturbance.")
        w_flow = r.number(dist, "flow_MW", "disturbance.", nonnegative=True)
        w_temp = r.number(dist, "temp_C", "disturbance.", nonnegative=True)

    # --- controller ---------------------------------------------------
    dt_s = N = Q_cost = poles = theta = None
    ctl = r.block(data, "controller", "")
    if ctl is not None:
        p = "controller."
        r.extras(ctl, {"dt_s", "horizon", "weights", "poles", "theta"}, p)
        dt_s = r.number(ctl, "dt_s", p, positive=True)
        N = r.integer(ctl, "horizon", p, minimum=1)
        n_u = 1 + len(sites)
        Q_cost = r.numbers(ctl, "weights", p, length=n_u if sites else None)
        if Q_cost is not None and any(q <= 0 for q in Q_cost):
            errors.append(f"{p}weights: entries must be positive")
        poles = r.numbers(ctl, "poles", p, length=2 * n_l if n_l else None)
        if poles is not None and any(not (0 <= abs(x) < 1) for x in poles):
            errors.append(f"{p}poles: entries must have magnitude in [0, 1)")
        theta = r.number(ctl, "theta", p, positive=True, default=1e-6)

    # --- simulation -----------------------------------------------------
    steps = seed = mode = ramp_rates = ramp_dur = None
    F_init, T_init = (), ()
    simb = r.block(data, "simulation", "")
    if simb is not None:
        p = "simulation."
        r.extras(simb, {"steps", "seed", "disturbance_mode", "ramp",
                        "initial"}, p)
        steps = r.integer(simb, "steps", p, minimum=0)
        seed = r.integer(simb, "seed", p, minimum=0, default=0)
        mode = r.text(simb, "disturbance_mode", p, default="uniform-box")
        if mode not in ("uniform-box", "extreme-vertex", "zero"):
            errors.append(f"{p}disturbance_mode: unknown mode {mode!r}")
        ramp = simb.get("ramp")
        if ramp is None:
            ramp_rates, ramp_dur = (0.0,) * n_l, 0
        elif isinstance(ramp, dict):
            rp = f"{p}ramp."
            r.extras(ramp, {"flow_MW_per_min", "duration_steps"}, rp)
            ramp_rates = r.numbers(ramp, "flow_MW_per_min", rp,
                                   length=n_l if n_l else None)
            ramp_dur = r.integer(ramp, "duration_steps", rp, minimum=0)
        else:
            errors.append(f"{p}ramp: not a mapping")
        init = simb.get("initial")
        if init is None:
            F_init, T_init = flow0, ()
        elif isinstance(init, dict):
            ip = f"{p}initial."
            r.extras(init, {"flows_MW", "temps_C"}, ip)
            F_init = (r.numbers(init, "flows_MW", ip, length=n_l)
                      if "flows_MW" in init else flow0) or ()
            T_init = (r.numbers(init, "temps_C", ip, length=n_l)
                      if "temps_C" in init else ()) or ()
        else:
            errors.append(f"{p}initial: not a mapping")

    if errors:
        raise ScenarioError(errors)

    return ScenarioConfig(
        name=name, format_version=version, nodes=nodes, slack_bus=slack,
        line_names=line_names, flow0_MW=flow0, temp_max_C=tmax,
        battery_node=batt_node, battery_ptdf=batt_ptdf, sites=sites,
        conductors=conductors, weather=weather_t,
        P_bar_MW=P_bar, E_min_MWh=E_min, E_max_MWh=E_max, E_init_MWh=E_init,
        flow_envelope_MW=envelope, w_flow_MW=w_flow, w_temp_C=w_temp,
        dt_s=dt_s, N=N, Q_cost=Q_cost, poles=poles, theta=theta,
        steps=steps, seed=seed, disturbance_mode=mode,
        ramp_MW_per_min=ramp_rates, ramp_duration_steps=ramp_dur,
        F_init_MW=F_init, T_init_C=T_init)


def scenario_hash(text):
    """Content hash binding controller artifacts to their scenario."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_scenario(path):
    """Read, parse, and validate a scenario file.

    Returns (ScenarioConfig, sha256 hex digest of the file content).
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as ex:
        raise ScenarioError([f"file is not valid YAML: {ex}"]) from ex
    return parse_scenario(data), scenario_hash(text)


# --------------------------------------------------------------- builders

def network_model(scn):
    cfg = SimpleNamespace(
        nodes=list(scn.nodes), slack_bus=scn.slack_bus,
        lines=[SimpleNamespace(name=n) for n in scn.line_names],
        battery=SimpleNamespace(node=scn.battery_node,
                                ptdf=list(scn.battery_ptdf)),
        curtailment_sites=[SimpleNamespace(node=s.node, ptdf=list(s.ptdf))
                           for s in scn.sites])
    return grid.load_network(cfg)


def thermal_pieces(scn):
    """Per-line coefficients and linearization points."""
    coeffs = tuple(thermal.coefficients(c, w, scn.dt_s)
                   for c, w in zip(scn.conductors, scn.weather))
    lps = tuple(
        thermal.LinearizationPoint(F0, thermal.equilibrium_temperature(F0, c))
        for F0, c in zip(scn.flow0_MW, coeffs))
    return coeffs, lps


def system_matrices(scn):
    net = network_model(scn)
    coeffs, lps = thermal_pieces(scn)
    lin_bounds = np.array([
        thermal.linearization_error_bound(
            TRUST_FRACTION * lp.F0_MW, scn.P_bar_MW, lp, c, l_batt=lb)
        for lp, c, lb in zip(lps, coeffs, net.L_batt)])
    sys_m = ltimodel.build_lti(net, coeffs, lps, scn.dt_s,
                               scn.w_flow_MW, scn.w_temp_C, lin_bounds)
    return net, coeffs, lps, sys_m


def constraint_boxes(scn, lps):
    """Original (untightened) state and control boxes."""
    T0 = np.array([lp.T0_C for lp in lps])
    n_l, n_g = scn.n_lines, scn.n_sites
    inf = np.inf
    lower = np.r_[np.full(n_l, -scn.flow_envelope_MW), 0.0 - T0,
                  -scn.P_bar_MW, scn.E_min_MWh,
                  np.full(n_g, -inf), np.zeros(n_g)]
    upper = np.r_[np.full(n_l, scn.flow_envelope_MW),
                  np.asarray(scn.temp_max_C) - T0,
                  scn.P_bar_MW, scn.E_max_MWh,
                  np.full(n_g, inf), [s.cap_MW for s in scn.sites]]
    X = polytope.Box(lower=lower, upper=upper)
    U = polytope.Box.symmetric(
        [scn.P_bar_MW] + [s.rate_max_MW for s in scn.sites])
    return X, U


def synthesize_controller(scn):
    """Scenario -> tube controller + synthesis report mapping.

    Raises robust.* errors (e.g. empty tightened sets) unchanged so the
    CLI can map them to its synthesis exit code.
    """
    net, coeffs, lps, sys_m = system_matrices(scn)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UserWarning)
        poles = robust.resolve_poles(scn.poles, net.n_lines, net.n_sites)
    gain = robust.synthesize_gain(sys_m, poles)
    A_c, B_c, w_c, _ = ltimodel.core_subsystem(sys_m)
    omega = robust.kofman_rpi(A_c + B_c @ gain.K_core, np.eye(len(w_c)),
                              w_c, theta=scn.theta)
    X, U = constraint_boxes(scn, lps)
    X_t, U_t = robust.tightened_boxes(X, U, gain, omega, sys_m.layout)
    cfg = mpc.MpcConfig(N=scn.N, Q_cost=tuple(scn.Q_cost))
    controller = sim.TubeController(sys=sys_m, gain=gain, omega=omega,
                                    X=X, U=U, X_t=X_t, U_t=U_t, cfg=cfg,
                                    P_bar_MW=scn.P_bar_MW)
    vol = _volume_proxy(U)
    vol_t = _volume_proxy(U_t)
    report = {
        "poles_requested": list(poles),
        "closed_loop_eigs": [float(x) for x in gain.closed_loop_eigs],
        "omega_radius": [float(x) for x in omega.radius],
        "omega_state_widths": [float(x) for x in omega.state_widths()],
        "control_volume_proxy": vol,
        "tightened_control_volume_proxy": vol_t,
        "tightened_control_fraction": vol_t / vol,
        "tightened_state_empty": bool(X_t.is_empty),
        "tightened_control_empty": bool(U_t.is_empty),
        "warnings": [str(w.message) for w in caught],
    }
    return controller, report


def _volume_proxy(box):
    widths = box.upper - box.lower
    return float(np.prod(widths[np.isfinite(widths)]))


def plant_model(scn):
    net, coeffs, lps, _ = system_matrices(scn)
    ramp = None
    if scn.ramp_duration_steps and any(scn.ramp_MW_per_min):
        per_step = np.asarray(scn.ramp_MW_per_min) * scn.dt_s / 60.0
        ramp = np.tile(per_step, (scn.ramp_duration_steps, 1))
    T_init = np.asarray(scn.T_init_C) if scn.T_init_C else None
    return sim.PlantModel(net=net, coeffs=coeffs, lps=lps, dt_s=scn.dt_s,
                          T_limit_C=np.asarray(scn.temp_max_C),
                          P_bar_MW=scn.P_bar_MW, E_min_MWh=scn.E_min_MWh,
                          E_max_MWh=scn.E_max_MWh, E_init_MWh=scn.E_init_MWh,
                          F_init_MW=np.asarray(scn.F_init_MW),
                          T_init_C=T_init, ramp_MW=ramp)


def disturbance_generator(scn, seed=None, mode=None):
    n_l = scn.n_lines
    W = polytope.Box.symmetric([scn.w_flow_MW] * n_l + [scn.w_temp_C] * n_l)
    return sim.DisturbanceGen(seed=scn.seed if seed is None else seed,
                              mode=scn.disturbance_mode if mode is None
                              else mode,
                              bounds=W)
