"""Linearized LTI prediction model with the one-step curtailment delay.

State layout (deviation coordinates around the linearization point):

    [ F_tilde (n_l) | T_tilde (n_l) | u_batt (1) | E_batt (1)
      | d_curt (n_g) | l_curt (n_g) ]

Controls are (du_batt, du_curt per site). A curtailment command lands in
the delay register d_curt one step after it is issued and reaches the
flows the step after that; l_curt accumulates the applied deltas so the
total curtailed power can be bounded.

Units: flows MW, temperatures degC, battery power MW, energy MWh.
"""

from dataclasses import dataclass

import numpy as np

from .thermal import alpha_tilde_MW

_S_PER_H = 3600.0


@dataclass(frozen=True)
class StateLayout:
    """Index ranges of the state blocks; blocks partition 0..n."""
    n_l: int
    n_g: int

    def __post_init__(self):
        if self.n_l < 1:
            raise ValueError("need at least one line")
        if self.n_g < 0:
            raise ValueError("n_g must be nonnegative")

    @property
    def n(self):
        return 2 * self.n_l + 2 + 2 * self.n_g

    @property
    def n_u(self):
        return 1 + self.n_g

    @property
    def flow(self):
        return slice(0, self.n_l)

    @property
    def temp(self):
        return slice(self.n_l, 2 * self.n_l)

    @property
    def u_batt(self):
        return 2 * self.n_l

    @property
    def e_batt(self):
        return 2 * self.n_l + 1

    @property
    def d_curt(self):
        return slice(2 * self.n_l + 2, 2 * self.n_l + 2 + self.n_g)

    @property
    def l_curt(self):
        return slice(2 * self.n_l + 2 + self.n_g, self.n)

    def block_slices(self):
        """All six blocks in layout order."""
        return (self.flow, self.temp, slice(self.u_batt, self.u_batt + 1),
                slice(self.e_batt, self.e_batt + 1), self.d_curt, self.l_curt)


@dataclass(frozen=True)
class SystemMatrices:
    """Immutable (A, B, w_bar) triple with its layout and provenance."""
    A: np.ndarray
    B: np.ndarray
    w_bar: np.ndarray
    layout: StateLayout
    lps: tuple           # LinearizationPoint per line
    coeffs: tuple        # ThermalCoefficients per line

    def __post_init__(self):
        n, n_u = self.layout.n, self.layout.n_u
        if self.A.shape != (n, n):
            raise ValueError(f"A must be {n}x{n}")
        if self.B.shape != (n, n_u):
            raise ValueError(f"B must be {n}x{n_u}")
        if self.w_bar.shape != (n,):
            raise ValueError(f"w_bar must have length {n}")
        if np.any(self.w_bar < 0.0):
            raise ValueError("w_bar must be nonnegative")
        lay = self.layout
        aux = np.r_[lay.u_batt, lay.e_batt,
                    np.arange(n)[lay.d_curt], np.arange(n)[lay.l_curt]]
        if np.any(self.w_bar[aux] != 0.0):
            raise ValueError("w_bar must be zero on exactly-known aux states")
        for arr in (self.A, self.B, self.w_bar):
            arr.setflags(write=False)


def build_lti(net, coeffs_per_line, lps, dt_s, w_flow_MW, w_temp_C,
              lin_bound_C=None):
    """Assemble (A, B, w_bar) for the deviation model.

    Block rows:
      F~+ = F~ + L_batt du_batt + L_curt d_curt + w_F
      T~+ = (1-b) T~ + 2 F0 a F~ + 2 F0 a L_batt du_batt + w_T
      u+  = u + du_batt
      E+  = E + dt u            (dt in hours; E in MWh)
      d+  = du_curt             (one-step delay register)
      l+  = l + d               (cumulative curtailment level)

    w_bar carries w_flow_MW on flows and w_temp_C plus the per-line
    linearization bound on temperatures; zero on the aux blocks.
    """
    n_l, n_g = net.n_lines, net.n_sites
    coeffs_per_line = tuple(coeffs_per_line)
    lps = tuple(lps)
    if len(coeffs_per_line) != n_l or len(lps) != n_l:
        raise ValueError("need one ThermalCoefficients and one "
                         "LinearizationPoint per line")
    if any(c.dt_s != dt_s for c in coeffs_per_line):
        raise ValueError("all lines must share the model time step")
    lin_bound = (np.zeros(n_l) if lin_bound_C is None
                 else np.asarray(lin_bound_C, dtype=float))
    if lin_bound.shape != (n_l,):
        raise ValueError(f"lin_bound_C must have length {n_l}")
    if w_flow_MW < 0.0 or w_temp_C < 0.0 or np.any(lin_bound < 0.0):
        raise ValueError("disturbance bounds must be nonnegative")

    lay = StateLayout(n_l=n_l, n_g=n_g)
    A = np.zeros((lay.n, lay.n))
    B = np.zeros((lay.n, lay.n_u))

    betas = np.array([c.beta for c in coeffs_per_line])
    gains = np.array([2.0 * lp.F0_MW * alpha_tilde_MW(c)
                      for lp, c in zip(lps, coeffs_per_line)])   # degC per MW

    A[lay.flow, lay.flow] = np.eye(n_l)
    A[lay.flow, lay.d_curt] = net.L_curt
    A[lay.temp, lay.flow] = np.diag(gains)
    A[lay.temp, lay.temp] = np.diag(1.0 - betas)
    A[lay.u_batt, lay.u_batt] = 1.0
    A[lay.e_batt, lay.u_batt] = dt_s / _S_PER_H
    A[lay.e_batt, lay.e_batt] = 1.0
    A[lay.l_curt, lay.d_curt] = np.eye(n_g)
    A[lay.l_curt, lay.l_curt] = np.eye(n_g)

    B[lay.flow, 0] = net.L_batt
    B[lay.temp, 0] = gains * net.L_batt
    B[lay.u_batt, 0] = 1.0
    B[lay.d_curt, 1:] = np.eye(n_g)

    w_bar = np.zeros(lay.n)
    w_bar[lay.flow] = w_flow_MW
    w_bar[lay.temp] = w_temp_C + lin_bound

    return SystemMatrices(A=A, B=B, w_bar=w_bar, layout=lay,
                          lps=lps, coeffs=coeffs_per_line)


def core_indices(layout):
    """State indices of the tube-design core: flows, temperatures, delay
    registers. The remaining states (u_batt, E_batt, l_curt) are pure
    integrators that the measurement anchors exactly (their w_bar is zero),
    so the disturbance tube never needs to cover them."""
    idx = np.arange(layout.n)
    return np.r_[idx[layout.flow], idx[layout.temp], idx[layout.d_curt]]


def core_subsystem(sys):
    """Restriction of (A, B, w_bar) to the tube-design core.

    Returns (A_core, B_core, w_core, idx). The core is closed under A
    up to inputs from the anchored integrators, which are all zero rows
    into the core except through B; the restriction below is exact
    because every A column from an anchored state into a core row is
    zero by construction (flows couple to d_curt, which is in the core).
    """
    idx = core_indices(sys.layout)
    A_core = sys.A[np.ix_(idx, idx)]
    B_core = sys.B[idx, :]
    w_core = sys.w_bar[idx]
    return A_core, B_core, w_core, idx


def u_tilde_forward(du_batt, F0, l_batt):
    """Substituted battery control: 2 F0 l du + (l du)^2."""
    if F0 < 1.0:
        raise ValueError("F0 must be at least 1 MW")
    y = l_batt * du_batt
    return 2.0 * F0 * y + y * y


def u_tilde_inverse(u_tilde, F0, l_batt, P_bar):
    """Unique preimage of u_tilde_forward in [-P_bar, P_bar].

    Solves y^2 + 2 F0 y = u_tilde for y = l_batt du on the branch through
    the origin, then divides out the PTDF.
    """
    if F0 < 1.0:
        raise ValueError("F0 must be at least 1 MW")
    if l_batt == 0.0:
        raise ValueError("l_batt must be nonzero for inversion")
    disc = F0 * F0 + u_tilde
    if disc < 0.0:
        raise ValueError("u_tilde outside the image of [-P_bar, P_bar]")
    y = -F0 + np.sqrt(disc)
    du = y / l_batt
    if abs(du) > P_bar + 1e-9:
        raise ValueError("u_tilde outside the image of [-P_bar, P_bar]")
    return float(np.clip(du, -P_bar, P_bar))


def scale_model(sys, state_scales, control_scales=None):
    """Similarity-scale the model: A -> D^-1 A D, B -> D^-1 B D_u, w -> D^-1 w.

    ``state_scales`` gives one positive scale per state block (flow, temp,
    u_batt, E_batt, d_curt, l_curt); ``control_scales`` one per control
    column (defaults to ones). Eigenvalues are unchanged.
    """
    lay = sys.layout
    state_scales = np.asarray(state_scales, dtype=float)
    if state_scales.shape != (6,):
        raise ValueError("state_scales must give one scale per block (6)")
    if np.any(state_scales <= 0.0):
        raise ValueError("scales must be strictly positive")
    d = np.empty(lay.n)
    for s, block in zip(state_scales, lay.block_slices()):
        d[block] = s
    if control_scales is None:
        du = np.ones(lay.n_u)
    else:
        du = np.asarray(control_scales, dtype=float)
        if du.shape != (lay.n_u,) or np.any(du <= 0.0):
            raise ValueError("control_scales must be positive, one per control")
    A = (sys.A * d[None, :]) / d[:, None]
    B = (sys.B * du[None, :]) / d[:, None]
    w_bar = sys.w_bar / d
    return SystemMatrices(A=A, B=B, w_bar=w_bar, layout=lay,
                          lps=sys.lps, coeffs=sys.coeffs)
