"""Closed-loop simulation of the tube controller against the nonlinear plant.

The loop implements the five-step receding-horizon procedure: measure the
plant, convert to deviation coordinates, solve the nominal QP, apply the
tube control law, and advance the nonlinear conductor/network model under
the drawn disturbance. Traces are immutable records of everything needed
to audit a run.

Coordinates: the plant lives in absolute units (MW flows, degC
temperatures); the controller lives in deviation coordinates around the
linearization point. Only flows and temperatures are shifted; battery
power/energy and the curtailment registers are shared between frames.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import grid, ltimodel, mpc, thermal

_S_PER_H = 3600.0


# --------------------------------------------------------------------- types

@dataclass(frozen=True)
class PlantState:
    """Absolute plant coordinates at one sampling instant."""
    F: np.ndarray            # MW per line
    T: np.ndarray            # degC per line
    u_batt: float            # MW (positive = charging draws from the line)
    E_batt: float            # MWh
    d_curt: np.ndarray       # MW per site, command in the delay register
    l_curt: np.ndarray       # MW per site, cumulative curtailment depth

    def __post_init__(self):
        for name in ("F", "T", "d_curt", "l_curt"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)


@dataclass(frozen=True)
class PlantModel:
    """Physics + limits of the simulated network (no controller state)."""
    net: grid.NetworkModel
    coeffs: tuple             # ThermalCoefficients per line
    lps: tuple                # LinearizationPoint per line
    dt_s: float
    T_limit_C: np.ndarray     # absolute limit per line
    P_bar_MW: float
    E_min_MWh: float
    E_max_MWh: float
    E_init_MWh: float
    F_init_MW: np.ndarray
    T_init_C: np.ndarray = None      # None -> equilibrium at F_init
    ramp_MW: np.ndarray = None       # (steps, n_l) exogenous flow increments

    def __post_init__(self):
        n_l = self.net.n_lines
        for name, size in (("T_limit_C", n_l), ("F_init_MW", n_l)):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (size,):
                raise ValueError(f"{name} must have length {size}")
            object.__setattr__(self, name, arr)
        if self.T_init_C is not None:
            arr = np.asarray(self.T_init_C, dtype=float)
            if arr.shape != (n_l,):
                raise ValueError(f"T_init_C must have length {n_l}")
            object.__setattr__(self, "T_init_C", arr)
        ramp = (np.zeros((0, n_l)) if self.ramp_MW is None
                else np.atleast_2d(np.asarray(self.ramp_MW, dtype=float)))
        if ramp.shape[1] != n_l:
            raise ValueError(f"ramp_MW must have {n_l} columns")
        object.__setattr__(self, "ramp_MW", ramp)
        if not (self.E_min_MWh <= self.E_init_MWh <= self.E_max_MWh):
            raise ValueError("initial battery energy outside its bounds")

    def initial_state(self):
        T = (np.array([thermal.equilibrium_temperature(F, c)
                       for F, c in zip(self.F_init_MW, self.coeffs)])
             if self.T_init_C is None else self.T_init_C.copy())
        n_g = self.net.n_sites
        return PlantState(F=self.F_init_MW.copy(), T=T, u_batt=0.0,
                          E_batt=self.E_init_MWh,
                          d_curt=np.zeros(n_g), l_curt=np.zeros(n_g))

    def ramp_slice(self, k, horizon):
        """Exogenous flow increments for steps k..k+horizon-1, zero-padded."""
        out = np.zeros((horizon, self.net.n_lines))
        if self.ramp_MW.shape[0] > k:
            take = self.ramp_MW[k:k + horizon]
            out[:take.shape[0]] = take
        return out


@dataclass(frozen=True)
class TubeController:
    """Everything the closed loop needs from the synthesis stage."""
    sys: ltimodel.SystemMatrices
    gain: object              # robust.FeedbackGain
    omega: object             # robust.RPISet (core coordinates)
    X: object                 # polytope.Box, original state constraints
    U: object                 # polytope.Box, original control constraints
    X_t: object               # tightened state box
    U_t: object               # tightened control box
    cfg: mpc.MpcConfig
    P_bar_MW: float

    def tightened_temperature_limit_C(self):
        lay = self.sys.layout
        T0 = np.array([lp.T0_C for lp in self.sys.lps])
        return T0 + self.X_t.upper[lay.temp]


_MODES = ("uniform-box", "extreme-vertex", "zero")


@dataclass(frozen=True)
class DisturbanceGen:
    """Deterministic per-run disturbance source.

    `bounds` is the disturbance box W over (flow rows, then temperature
    rows). The same generator always produces the same sample sheet, so
    runs are reproducible bit for bit.
    """
    seed: int
    mode: str
    bounds: object            # polytope.Box

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.bounds.is_empty:
            raise ValueError("disturbance bounds must be nonempty")

    def samples(self, steps):
        """(steps, dim) array of disturbances, every row inside W."""
        lo, hi = self.bounds.lower, self.bounds.upper
        if self.mode == "zero":
            return np.zeros((steps, self.bounds.dim))
        rng = np.random.default_rng(self.seed)
        if self.mode == "uniform-box":
            return rng.uniform(lo, hi, size=(steps, self.bounds.dim))
        picks = rng.integers(0, 2, size=(steps, self.bounds.dim))
        return np.where(picks == 1, hi, lo)


@dataclass(frozen=True)
class SimTrace:
    """Immutable record of one run; state arrays hold steps + 1 rows."""
    t_s: np.ndarray                 # (steps + 1,)
    F_MW: np.ndarray                # (steps + 1, n_l)
    T_C: np.ndarray                 # (steps + 1, n_l)
    u_batt_MW: np.ndarray           # (steps + 1,)
    E_MWh: np.ndarray               # (steps + 1,)
    d_curt_MW: np.ndarray           # (steps + 1, n_g)
    l_curt_MW: np.ndarray           # (steps + 1, n_g)
    x0_star: np.ndarray             # (steps, n) nominal initial state
    u0_star: np.ndarray             # (steps, n_u) nominal first move
    kappa: np.ndarray               # (steps, n_u) applied control
    w: np.ndarray                   # (steps, 2 n_l) drawn disturbance
    qp_status: tuple                # per step: optimal/infeasible/max_iter/free
    margin: np.ndarray              # (steps,) min tightened-facet margin
    iterations: np.ndarray          # (steps,)
    wall_s: np.ndarray              # (steps,) not part of the CSV contract
    battery_saturated: np.ndarray   # (steps,) bool
    fallback: np.ndarray            # (steps,) bool, True when QP not optimal

    def __len__(self):
        return self.t_s.shape[0]

    @property
    def steps(self):
        return self.t_s.shape[0] - 1


@dataclass(frozen=True)
class SummaryReport:
    steps: int
    max_T_C: np.ndarray             # per line
    violations: int                 # count of (step, line) with T > limit
    curtailed_MWh: float            # integral of total curtailment depth
    battery_throughput_MWh: float   # sum of |E(k+1) - E(k)|
    infeasible_steps: int
    min_margin: float
    battery_saturated_steps: int


# ----------------------------------------------------------------- helpers

def deviation_state(state, lps):
    """Absolute PlantState -> deviation vector in the model layout."""
    F0 = np.array([lp.F0_MW for lp in lps])
    T0 = np.array([lp.T0_C for lp in lps])
    return np.concatenate([state.F - F0, state.T - T0,
                           [state.u_batt], [state.E_batt],
                           state.d_curt, state.l_curt])


def plant_step(plant, state, kappa, w_F, w_T, ramp_k):
    """One nonlinear plant step under applied control kappa.

    Order matches the prediction model: the battery move changes the
    Joule heating and the flows this step; the curtailment command lands
    in the delay register and reaches the flows next step; energy
    integrates the pre-update battery power.
    """
    net = plant.net
    dF_batt = net.L_batt * kappa[0]
    T_next = np.array([
        thermal.step_nonlinear(state.T[i], state.F[i], plant.coeffs[i],
                               batt_flow_delta_MW=dF_batt[i], w_temp=w_T[i])
        for i in range(net.n_lines)])
    F_next = grid.flow_update(net, state.F, kappa[0], state.d_curt,
                              w_F + ramp_k)
    u_next = state.u_batt + kappa[0]
    E_next = state.E_batt + state.u_batt * plant.dt_s / _S_PER_H
    d_next = np.asarray(kappa[1:], dtype=float).copy()
    l_next = state.l_curt + state.d_curt
    if not (plant.E_min_MWh - 1e-9 <= E_next <= plant.E_max_MWh + 1e-9):
        raise RuntimeError(
            f"battery energy bound breached: E = {E_next:.6f} MWh outside "
            f"[{plant.E_min_MWh}, {plant.E_max_MWh}] MWh")
    return PlantState(F=F_next, T=T_next, u_batt=u_next, E_batt=E_next,
                      d_curt=d_next, l_curt=l_next)


def _tightened_margin(x_dev, X_t):
    """Min slack of the measured deviation over the finite tightened
    state facets (negative when the tube is absorbing a disturbance)."""
    margins = []
    for i in range(X_t.dim):
        if np.isfinite(X_t.upper[i]):
            margins.append(X_t.upper[i] - x_dev[i])
        if np.isfinite(X_t.lower[i]):
            margins.append(x_dev[i] - X_t.lower[i])
    return float(min(margins))


def _free_margin(state, plant):
    return float(np.min(plant.T_limit_C - state.T))


def _fallback_action(controller, x_dev, last_sol, age):
    """Replay the most recent feasible plan when the QP reports anything
    other than optimal: kappa = u_ref + K (x - x_ref) with (x_ref, u_ref)
    the plan entry `age` steps ahead of its solve; past the plan horizon
    (or with no plan at all) the reference is the measurement itself, so
    the command degrades to zero."""
    lay = controller.sys.layout
    if last_sol is not None and age < last_sol.u_star.shape[0]:
        x_ref, u_ref = last_sol.x_star[age], last_sol.u_star[age]
    else:
        x_ref, u_ref = x_dev, np.zeros(lay.n_u)
    ref = mpc.NominalSolution(u_star=u_ref[None, :],
                              x_star=np.stack([x_ref, x_ref]),
                              objective=0.0, status="optimal")
    return mpc.tube_law(ref, controller.gain, x_dev, lay,
                        P_bar=controller.P_bar_MW)


# -------------------------------------------------------------------- runs

def _run(plant, controller, steps, gen):
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    n_l, n_g = plant.net.n_lines, plant.net.n_sites
    n_u = 1 + n_g
    lay = controller.sys.layout if controller is not None else None
    n = lay.n if controller is not None else 2 * n_l + 2 + 2 * n_g

    w_all = gen.samples(steps)
    state = plant.initial_state()

    F = np.zeros((steps + 1, n_l)); T = np.zeros((steps + 1, n_l))
    ub = np.zeros(steps + 1); E = np.zeros(steps + 1)
    d = np.zeros((steps + 1, n_g)); l = np.zeros((steps + 1, n_g))
    x0s = np.full((steps, n), np.nan)
    u0s = np.full((steps, n_u), np.nan)
    kap = np.zeros((steps, n_u))
    margin = np.zeros(steps)
    iters = np.zeros(steps, dtype=int)
    wall = np.zeros(steps)
    sat = np.zeros(steps, dtype=bool)
    fb = np.zeros(steps, dtype=bool)
    status = []

    last_sol, last_k, warm = None, -1, None
    for k in range(steps + 1):
        F[k], T[k], ub[k], E[k] = state.F, state.T, state.u_batt, state.E_batt
        d[k], l[k] = state.d_curt, state.l_curt
        if k == steps:
            break
        w_F, w_T = w_all[k, :n_l], w_all[k, n_l:]
        ramp_now = plant.ramp_slice(k, 1)[0]

        if controller is None:
            kappa = np.zeros(n_u)
            status.append("free")
            margin[k] = _free_margin(state, plant)
        else:
            t0 = time.perf_counter()
            x_dev = deviation_state(state, controller.sys.lps)
            affine = np.zeros((controller.cfg.N, lay.n))
            affine[:, lay.flow] = plant.ramp_slice(k, controller.cfg.N)
            qp = mpc.build_qp(controller.sys, controller.X_t, controller.U_t,
                              controller.omega, x_dev, controller.cfg,
                              affine_terms=affine)
            sol = mpc.solve_qp(qp, warm=warm)
            if sol.status == "optimal":
                action = mpc.tube_law(sol, controller.gain, x_dev, lay,
                                      P_bar=controller.P_bar_MW)
                x0s[k], u0s[k] = sol.x0, sol.u_star[0]
                last_sol, last_k = sol, k
                warm = np.concatenate([sol.x0, sol.u_star.ravel()])
            else:
                action = _fallback_action(controller, x_dev, last_sol,
                                          k - last_k)
                fb[k] = True
            wall[k] = time.perf_counter() - t0
            kappa = action.u
            sat[k] = action.battery_saturated
            status.append(sol.status)
            iters[k] = sol.iterations
            margin[k] = _tightened_margin(x_dev, controller.X_t)

        kap[k] = kappa
        state = plant_step(plant, state, kappa, w_F, w_T, ramp_now)

    t_s = np.arange(steps + 1) * plant.dt_s
    return SimTrace(t_s=t_s, F_MW=F, T_C=T, u_batt_MW=ub, E_MWh=E,
                    d_curt_MW=d, l_curt_MW=l, x0_star=x0s, u0_star=u0s,
                    kappa=kap, w=w_all, qp_status=tuple(status),
                    margin=margin, iterations=iters, wall_s=wall,
                    battery_saturated=sat, fallback=fb)


def run_closed_loop(plant, controller, steps, gen):
    """Measure -> nominal QP -> tube law -> nonlinear plant, `steps` times."""
    if controller is None:
        raise ValueError("run_closed_loop needs a controller; "
                         "use run_free for the uncontrolled system")
    return _run(plant, controller, steps, gen)


def run_free(plant, steps, gen):
    """Uncontrolled system: kappa forced to zero, same plant and noise."""
    return _run(plant, None, steps, gen)


def summarize(trace, limits_C):
    """Reduce a trace to the headline numbers of a run."""
    if len(trace) == 0:
        raise ValueError("trace must be nonempty")
    limits_C = np.asarray(limits_C, dtype=float)
    steps = trace.steps
    violations = int(np.sum(trace.T_C > limits_C[None, :]))
    dt_h = (trace.t_s[1] - trace.t_s[0]) / _S_PER_H if steps else 0.0
    curtailed = float(trace.l_curt_MW[:-1].sum() * dt_h) if steps else 0.0
    throughput = float(np.abs(np.diff(trace.E_MWh)).sum())
    infeasible = int(sum(s == "infeasible" for s in trace.qp_status))
    return SummaryReport(
        steps=steps,
        max_T_C=trace.T_C.max(axis=0),
        violations=violations,
        curtailed_MWh=curtailed,
        battery_throughput_MWh=throughput,
        infeasible_steps=infeasible,
        min_margin=float(trace.margin.min()) if steps else np.inf,
        battery_saturated_steps=int(trace.battery_saturated.sum()))
