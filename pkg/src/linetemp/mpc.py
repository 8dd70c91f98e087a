"""Nominal tube-MPC optimal control problem and solver.

The nominal problem optimizes jointly over the control sequence and the
free initial nominal state x0, with the measured state required to sit
inside the tube around x0 (membership expressed in the RPI set's
V-coordinates). States and controls obey the tightened sets; dynamics
are condensed into the constraint rows, so the decision vector is just
(x0, u_0..u_{N-1}). The exactly-measured integrator states anchor x0
through equality constraints.

Solves are delegated to a dense interior-point method (cvxopt); this
module computes and enforces its own KKT residuals, so the tolerance
contract does not depend on the solver's internal stopping rule.
"""

from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix, solvers

from . import ltimodel

_BIG = 1e15          # bounds at or above this are treated as absent
_KKT_TOL = 1e-6
_PRIMAL_TOL = 1e-7


@dataclass(frozen=True)
class MpcConfig:
    """Horizon and control-move weights.

    Q_cost holds one strictly positive diagonal weight per control channel
    (battery first, then each curtailment site); the stage cost is the
    weighted quadratic form du' Q du.
    """
    N: int = 10
    Q_cost: tuple = (1.0, 10.0, 10.0)
    norm: str = "quadratic"
    epsilon_x0: float = 1e-6
    max_iter: int = 20_000

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("horizon N must be at least 1")
        if any(q <= 0.0 for q in self.Q_cost):
            raise ValueError("Q_cost diagonal entries must be positive")
        if self.norm != "quadratic":
            raise ValueError("only the quadratic norm is supported")
        if self.epsilon_x0 <= 0.0:
            raise ValueError("epsilon_x0 must be positive")


@dataclass(frozen=True)
class NominalSolution:
    """Optimal nominal plan: u_star (N, n_u), x_star (N+1, n)."""
    u_star: np.ndarray
    x_star: np.ndarray
    objective: float
    status: str                   # optimal | infeasible | max_iter
    iterations: int = 0
    kkt_residual: float = np.nan

    @property
    def x0(self):
        return self.x_star[0]


@dataclass
class QP:
    """Dense condensed QP: min 1/2 z'Hz + g'z s.t. Gz <= h, E z = e."""
    H: np.ndarray
    g: np.ndarray
    G: np.ndarray
    h: np.ndarray
    E: np.ndarray
    e: np.ndarray
    n: int
    n_u: int
    N: int
    Sx: list = field(repr=False)
    Su: list = field(repr=False)
    sr: list = field(repr=False)
    Q_cost: np.ndarray = field(repr=False)
    epsilon_x0: float = 1e-8
    max_iter: int = 20_000

    @property
    def n_z(self):
        return self.n + self.n_u * self.N


def _box_rows(box, idx_map, n_z, h_shift=None):
    """Inequality rows for finite bounds of `box` through linear maps.

    idx_map: for each box coordinate i, a row vector over z (length n_z)
    representing that coordinate; h_shift optional per-coordinate offset
    already accumulated in the affine prediction.
    """
    G_rows, h_rows = [], []
    shift = np.zeros(box.dim) if h_shift is None else h_shift
    for i in range(box.dim):
        if box.upper[i] < _BIG:
            G_rows.append(idx_map[i])
            h_rows.append(box.upper[i] - shift[i])
        if box.lower[i] > -_BIG:
            G_rows.append(-idx_map[i])
            h_rows.append(shift[i] - box.lower[i])
    return G_rows, h_rows


def build_qp(sys, X_t, U_t, omega, x_measured, cfg, affine_terms=None):
    """Condense the nominal problem into a dense QP.

    X_t, U_t: tightened state/control boxes (the state box applies to
    the predicted steps k = 1..N; the measured step is constrained only
    through the tube membership). omega: the core RPI set for the
    membership constraint x_measured - x0 in Omega.
    affine_terms: optional (N, n) known per-step additive disturbance
    preview (e.g. a forecast generation ramp) entering the nominal
    dynamics x_{k+1} = A x_k + B u_k + affine_terms[k].
    """
    if X_t.is_empty or U_t.is_empty:
        raise ValueError("tightened sets are empty")
    lay = sys.layout
    n, n_u, N = lay.n, lay.n_u, cfg.N
    if X_t.dim != n or U_t.dim != n_u:
        raise ValueError("tightened box dimensions do not match the model")
    x_measured = np.asarray(x_measured, dtype=float)
    if x_measured.shape != (n,):
        raise ValueError(f"x_measured must have length {n}")
    if affine_terms is None:
        affine = np.zeros((N, n))
    else:
        affine = np.asarray(affine_terms, dtype=float)
        if affine.shape != (N, n):
            raise ValueError(f"affine_terms must have shape ({N}, {n})")

    n_z = n + n_u * N
    core = ltimodel.core_indices(lay)
    aux = np.setdiff1d(np.arange(n), core)

    # prediction operators: x_k = Sx[k] x0 + Su[k] u_flat + sr[k]
    Sx = [np.eye(n)]
    Su = [np.zeros((n, n_u * N))]
    sr = [np.zeros(n)]
    for k in range(N):
        Su_next = sys.A @ Su[k]
        Su_next[:, k * n_u:(k + 1) * n_u] += sys.B
        Sx.append(sys.A @ Sx[k])
        Su.append(Su_next)
        sr.append(sys.A @ sr[k] + affine[k])

    # strictly convex in x0 through a small regularizer centered on the
    # measurement: ties break toward x0 = x_measured, so the tube
    # correction vanishes identically when the measurement is admissible
    H = np.zeros((n_z, n_z))
    H[:n, :n] = 2.0 * cfg.epsilon_x0 * np.eye(n)
    Qd = np.diag(np.asarray(cfg.Q_cost, dtype=float))
    for k in range(N):
        j = n + k * n_u
        H[j:j + n_u, j:j + n_u] = 2.0 * Qd
    g = np.zeros(n_z)
    g[:n] = -2.0 * cfg.epsilon_x0 * x_measured

    # equalities: anchor the exactly measured integrator states
    E = np.zeros((len(aux), n_z))
    E[np.arange(len(aux)), aux] = 1.0
    e = x_measured[aux]

    G_rows, h_rows = [], []

    # tube membership in V-coordinates: |V_inv (x_meas_core - x0_core)| <= r
    Vi = omega.V_inv
    m_core = x_measured[core]
    for sign in (+1.0, -1.0):
        rows = np.zeros((omega.dim, n_z))
        rows[:, core] = -sign * Vi
        G_rows.extend(rows)
        h_rows.extend(omega.radius - sign * (Vi @ m_core))

    # The tightened state box binds the predicted steps k = 1..N only:
    # the k = 0 state is already measured and not actionable, and binding
    # x0 would turn a recoverable hot measurement into an infeasible
    # problem instead of an immediate corrective action.
    for k in range(1, N + 1):
        maps = [np.concatenate([Sx[k][i], Su[k][i]]) for i in range(n)]
        rows, offs = _box_rows(X_t, maps, n_z, h_shift=sr[k])
        G_rows.extend(rows)
        h_rows.extend(offs)

    # controls obey the tightened control box
    for k in range(N):
        for j in range(n_u):
            row = np.zeros(n_z)
            row[n + k * n_u + j] = 1.0
            if U_t.upper[j] < _BIG:
                G_rows.append(row.copy())
                h_rows.append(U_t.upper[j])
            if U_t.lower[j] > -_BIG:
                G_rows.append(-row)
                h_rows.append(-U_t.lower[j])

    return QP(H=H, g=g, G=np.array(G_rows), h=np.array(h_rows), E=E, e=e,
              n=n, n_u=n_u, N=N, Sx=Sx, Su=Su, sr=sr,
              Q_cost=np.asarray(cfg.Q_cost, dtype=float),
              epsilon_x0=cfg.epsilon_x0, max_iter=cfg.max_iter)


def _kkt_residual(qp, z, lam, nu):
    """Worst KKT residual (stationarity, dual feas., complementarity)."""
    stat = qp.H @ z + qp.g + qp.G.T @ lam + qp.E.T @ nu
    slack = qp.h - qp.G @ z
    res = max(np.linalg.norm(stat, np.inf),
              max(0.0, float(-lam.min())) if lam.size else 0.0,
              float(np.abs(lam * slack).max()) if lam.size else 0.0)
    if qp.E.shape[0]:
        res = max(res, float(np.abs(qp.E @ z - qp.e).max()))
    return res


def _decode(qp, z, status, iterations, kkt):
    u_flat = z[qp.n:]
    u_star = u_flat.reshape(qp.N, qp.n_u)
    x0 = z[:qp.n]
    x_star = np.stack([qp.Sx[k] @ x0 + qp.Su[k] @ u_flat + qp.sr[k]
                       for k in range(qp.N + 1)])
    objective = float(sum(u @ (qp.Q_cost * u) for u in u_star))
    return NominalSolution(u_star=u_star, x_star=x_star, objective=objective,
                           status=status, iterations=iterations,
                           kkt_residual=kkt)


def _polish(qp, z, lam, nu):
    """Active-set polish: fix the facets the IPM marks active and solve
    the equality-constrained KKT system exactly. Returns a refined
    (z, lam, nu) or None when the guess is not KKT-consistent."""
    slack = qp.h - qp.G @ z
    active = (lam > 1e-8) | (slack < 1e-9)
    Ga = qp.G[active]
    n_z, n_a, n_e = qp.n_z, int(active.sum()), qp.E.shape[0]
    kkt = np.zeros((n_z + n_a + n_e, n_z + n_a + n_e))
    kkt[:n_z, :n_z] = qp.H
    kkt[:n_z, n_z:n_z + n_a] = Ga.T
    kkt[:n_z, n_z + n_a:] = qp.E.T
    kkt[n_z:n_z + n_a, :n_z] = Ga
    kkt[n_z + n_a:, :n_z] = qp.E
    rhs = np.concatenate([-qp.g, qp.h[active], qp.e])
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    z_p = sol[:n_z]
    lam_p = np.zeros(qp.G.shape[0])
    lam_p[active] = sol[n_z:n_z + n_a]
    nu_p = sol[n_z + n_a:]
    feasible = float((qp.G @ z_p - qp.h).max()) <= 1e-9 if qp.G.size else True
    if not feasible or np.any(lam_p < -1e-9):
        return None
    lam_p = np.maximum(lam_p, 0.0)
    return z_p, lam_p, nu_p


def _is_feasible(qp):
    """Classify feasibility with a zero-cost LP (conelp certifies it)."""
    c = matrix(np.zeros(qp.n_z))
    try:
        res = solvers.lp(c, matrix(qp.G), matrix(qp.h), matrix(qp.E),
                         matrix(qp.e), options={"show_progress": False})
    except ValueError:
        return False
    return res["status"] != "primal infeasible"


def _empty_solution(qp, status, iterations=0):
    return NominalSolution(u_star=np.zeros((qp.N, qp.n_u)),
                           x_star=np.zeros((qp.N + 1, qp.n)),
                           objective=np.inf, status=status,
                           iterations=iterations)


def solve_qp(qp, warm=None):
    """Solve the condensed QP; statuses: optimal / infeasible / max_iter.

    Enforces this module's own KKT residual tolerance (1e-6 inf-norm,
    primal violation 1e-7) on the returned iterate rather than trusting
    the backend's label; an unclean exit is classified by a feasibility
    LP. Deterministic for identical inputs. `warm` is an optional initial
    z (a performance device only; the optimum must not depend on it).
    """
    opts = {"show_progress": False, "maxiters": min(qp.max_iter, 1000),
            "abstol": 1e-10, "reltol": 1e-10, "feastol": 1e-10}
    kwargs = {}
    if warm is not None:
        kwargs["initvals"] = {"x": matrix(np.asarray(warm, dtype=float))}
    try:
        result = solvers.qp(matrix(qp.H), matrix(qp.g), matrix(qp.G),
                            matrix(qp.h), matrix(qp.E), matrix(qp.e),
                            options=opts, **kwargs)
    except ValueError:
        result = None
    if result is None or result["x"] is None:
        if not _is_feasible(qp):
            return _empty_solution(qp, "infeasible")
        return _empty_solution(qp, "max_iter")
    iterations = int(result.get("iterations", 0))
    z = np.array(result["x"]).ravel()
    lam = (np.array(result["z"]).ravel() if result["z"] is not None
           else np.zeros(qp.G.shape[0]))
    nu = (np.array(result["y"]).ravel() if result["y"] is not None
          else np.zeros(qp.E.shape[0]))
    kkt = _kkt_residual(qp, z, lam, nu)
    polished = _polish(qp, z, lam, nu)
    if polished is not None:
        kkt_p = _kkt_residual(qp, *polished)
        if kkt_p < kkt:
            z, lam, nu = polished
            kkt = kkt_p
    primal = (float(max(0.0, (qp.G @ z - qp.h).max())) if qp.G.size else 0.0)
    if kkt <= _KKT_TOL and primal <= _PRIMAL_TOL:
        return _decode(qp, z, "optimal", iterations, kkt)
    # the iterate does not certify optimality; classify the unclean exit
    if not _is_feasible(qp):
        return _empty_solution(qp, "infeasible")
    return _decode(qp, z, "max_iter", iterations, kkt)


@dataclass(frozen=True)
class ControlAction:
    """Applied tube control with its saturation flag."""
    u: np.ndarray
    battery_saturated: bool


def tube_law(sol, gain, x_measured, layout, P_bar):
    """kappa = u0* + K (x_measured - x0*), battery clamped to physics.

    The clamp keeps the commanded battery power inside [-P_bar, P_bar]
    given the measured battery state; activation is flagged so callers
    can log it.
    """
    if sol.status != "optimal":
        raise ValueError("tube_law requires an optimal nominal solution")
    x_measured = np.asarray(x_measured, dtype=float)
    kappa = sol.u_star[0] + gain.K @ (x_measured - sol.x0)
    u_batt = x_measured[layout.u_batt]
    lo, hi = -P_bar - u_batt, P_bar - u_batt
    saturated = not (lo - 1e-12 <= kappa[0] <= hi + 1e-12)
    kappa = kappa.copy()
    kappa[0] = np.clip(kappa[0], lo, hi)
    return ControlAction(u=kappa, battery_saturated=bool(saturated))
