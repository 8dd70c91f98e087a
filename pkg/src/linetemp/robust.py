"""Gain synthesis, Kofman RPI construction, refinement, tightening.

The disturbance tube lives on the design core (flows, temperatures,
curtailment delay registers): that subsystem is fully controllable and
its closed loop can be made strictly stable with real eigenvalues, which
the RPI theorem requires. The battery power/energy and cumulative
curtailment states are pure integrators that each measurement pins down
exactly (their disturbance bound is zero); they are held — managed by
explicit constraints in the nominal problem, not by the tube.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import place_poles

from . import ltimodel
from .polytope import HPolytope

#: blocks that synthesize_gain may hold at their open-loop (marginally
#: stable) eigenvalue because measurements anchor them exactly
HELD_BLOCKS = ("u_batt", "e_batt", "l_curt")


@dataclass(frozen=True)
class FeedbackGain:
    """Tube feedback gain, embedded at full state width.

    K has zero columns on the held integrator states; strict stability
    with real eigenvalues is certified on the design core (A_c + B_c K_c),
    which is the system the tube actually runs on.
    """
    K: np.ndarray                # (n_u, n_full)
    core_idx: np.ndarray         # indices of the design core
    closed_loop_eigs: np.ndarray  # certified eigenvalues of A_c + B_c K_c

    def __post_init__(self):
        self.K.setflags(write=False)
        self.core_idx.setflags(write=False)
        self.closed_loop_eigs.setflags(write=False)

    @property
    def K_core(self):
        return self.K[:, self.core_idx]


@dataclass(frozen=True)
class RPISet:
    """Robust positively invariant set {x : |V_inv x| <= radius}."""
    V_inv: np.ndarray
    radius: np.ndarray
    theta: np.ndarray
    V: np.ndarray
    eigs: np.ndarray

    def __post_init__(self):
        if np.any(self.radius <= 0.0):
            raise ValueError("RPI radius must be strictly positive elementwise")
        for arr in (self.V_inv, self.radius, self.theta, self.V, self.eigs):
            arr.setflags(write=False)

    @property
    def dim(self):
        return self.V_inv.shape[0]

    def support(self, direction):
        """h_Omega(d) = sum_i |(d' V)_i| radius_i."""
        d = np.asarray(direction, dtype=float)
        return float(np.abs(d @ self.V) @ self.radius)

    def contains(self, x, tol=1e-9):
        return bool(np.all(np.abs(self.V_inv @ np.asarray(x, float))
                           <= self.radius + tol))

    def state_widths(self):
        """Per-coordinate half-widths of the interval hull, |V| @ radius."""
        return np.abs(self.V) @ self.radius

    def as_hpolytope(self):
        normals = np.vstack([self.V_inv, -self.V_inv])
        offsets = np.concatenate([self.radius, self.radius])
        return HPolytope(normals, offsets)


def place_gain(A, B, poles):
    """K with eig(A + BK) = poles (all real), verified by an eigensolve."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    poles = np.sort(np.asarray(poles, dtype=float))
    if np.any(np.abs(poles) >= 1.0):
        raise ValueError("poles must be strictly inside the unit circle")
    if poles.shape[0] != A.shape[0]:
        raise ValueError("need exactly one pole per state of the design system")
    # scipy places eig(A - BK); negate for the A + BK convention
    K = -place_poles(A, B, poles).gain_matrix
    achieved = np.linalg.eigvals(A + B @ K)
    if np.max(np.abs(achieved.imag)) > 1e-9:
        raise ValueError("closed-loop eigenvalues came out complex; "
                         "choose different poles")
    achieved = np.sort(achieved.real)
    if np.max(np.abs(achieved - poles)) > 1e-8:
        raise ValueError("pole placement verification failed: requested "
                         f"{poles}, achieved {achieved}")
    return K, achieved


def synthesize_gain(sys, poles, held_blocks=HELD_BLOCKS):
    """Stabilizing tube gain for the design core of `sys`.

    `sys` is either a SystemMatrices (core extracted, integrators held)
    or a plain (A, B) pair (whole system is the design system). Every
    mode left unassigned must be open-loop stable or belong to a held
    block; the held blocks here are exactly the zero-disturbance
    integrators, so the tube never needs them.
    """
    if isinstance(sys, tuple):
        A, B = sys
        K, achieved = place_gain(A, B, poles)
        n = np.atleast_2d(A).shape[0]
        return FeedbackGain(K=K, core_idx=np.arange(n),
                            closed_loop_eigs=achieved)

    missing = [b for b in HELD_BLOCKS if b not in held_blocks]
    if missing:
        raise ValueError(
            f"unassigned marginally stable blocks not held: {missing}; "
            "every non-core mode sits at eigenvalue 1 and must be "
            "explicitly held")
    A_c, B_c, _, idx = ltimodel.core_subsystem(sys)
    n_c = A_c.shape[0]
    ctrb = np.hstack([np.linalg.matrix_power(A_c, k) @ B_c for k in range(n_c)])
    if np.linalg.matrix_rank(ctrb) < n_c:
        raise ValueError("design core is not controllable; cannot stabilize")
    K_c, achieved = place_gain(A_c, B_c, poles)
    K = np.zeros((sys.layout.n_u, sys.layout.n))
    K[:, idx] = K_c
    return FeedbackGain(K=K, core_idx=np.asarray(idx),
                        closed_loop_eigs=achieved)


def resolve_poles(coupled_poles, n_l, n_g, delay_pole=0.1):
    """Full design-core pole list from the configured coupled-mode poles.

    The configuration names 2*n_l poles for the coupled flow/temperature
    modes; delay registers default to `delay_pole`. Duplicates are
    perturbed by 1e-3 (with a warning) to keep the eigenvector basis
    well-conditioned.
    """
    coupled = [float(p) for p in coupled_poles]
    if len(coupled) != 2 * n_l:
        raise ValueError(f"need {2 * n_l} coupled-mode poles, got {len(coupled)}")
    full = coupled + [float(delay_pole)] * n_g
    out = []
    perturbed = False
    for p in full:
        while any(abs(p - q) < 1e-9 for q in out):
            p += 1e-3
            perturbed = True
        out.append(p)
    if perturbed:
        warnings.warn("duplicate poles perturbed by 1e-3 to keep the "
                      "eigenvector basis well-conditioned")
    if any(abs(p) >= 1.0 for p in out):
        raise ValueError("poles must be strictly inside the unit circle")
    return out


def kofman_rpi(A_K, B_w, w_bar, theta=None):
    """RPI set of x+ = A_K x + B_w w, |w| <= w_bar, for real-eigenvalue A_K.

    Omega = {x : |V^-1 x| <= r}, r = |I - D|^-1 |V^-1 B_w| w_bar + theta
    with A_K = V D V^-1 and |I - D|^-1 diagonal entries 1/(1 - |d_i|).
    """
    A_K = np.atleast_2d(np.asarray(A_K, dtype=float))
    B_w = np.atleast_2d(np.asarray(B_w, dtype=float))
    w_bar = np.atleast_1d(np.asarray(w_bar, dtype=float))
    n = A_K.shape[0]
    lam, V = np.linalg.eig(A_K)
    if np.max(np.abs(lam.imag)) > 1e-9:
        raise ValueError("A_K has complex eigenvalues; the RPI construction "
                         "requires real ones — choose different poles")
    lam = lam.real
    V = V.real
    if np.max(np.abs(lam)) >= 1.0:
        raise ValueError("A_K is not strictly stable")
    if np.linalg.cond(V) > 1e8:
        raise ValueError("A_K is defective (ill-conditioned eigenvector "
                         "basis); choose different poles")
    V_inv = np.linalg.inv(V)
    if theta is None:
        theta = np.full(n, 1e-6)
    else:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if np.any(theta < 0.0):
            raise ValueError("theta must be nonnegative")
    gain = np.abs(V_inv @ B_w) @ w_bar
    radius = gain / (1.0 - np.abs(lam)) + theta
    return RPISet(V_inv=V_inv, radius=radius, theta=theta, V=V, eigs=lam)


def refine_rpi(A_K, B_w, w_bar, omega0, iters=500):
    """Shrink an invariant set by iterating its own one-step image.

    r_{j+1} = |V^-1 A_K V| r_j + |V^-1 B_w| w_bar (interval hull of
    A_K Omega_j (+) W in V-coordinates), floored at theta; stops when the
    radius moves less than 1e-9. Radii never increase, and every iterate
    is itself invariant.
    """
    A_K = np.atleast_2d(np.asarray(A_K, dtype=float))
    B_w = np.atleast_2d(np.asarray(B_w, dtype=float))
    w_bar = np.atleast_1d(np.asarray(w_bar, dtype=float))
    M = np.abs(omega0.V_inv @ A_K @ omega0.V)
    c = np.abs(omega0.V_inv @ B_w) @ w_bar
    r = omega0.radius.copy()
    for _ in range(iters):
        r_next = np.maximum(M @ r + c, omega0.theta)
        r_next = np.minimum(r_next, r)   # keep the certified outer bound
        if np.max(np.abs(r_next - r)) < 1e-9:
            r = r_next
            break
        r = r_next
    return RPISet(V_inv=omega0.V_inv, radius=r, theta=omega0.theta,
                  V=omega0.V, eigs=omega0.eigs)


def verify_invariance(omega, A_K, B_w, w_bar, n_samples=10_000, seed=0):
    """Sampled invariance certificate.

    Draws boundary points of Omega, pushes each through one step against
    every vertex of W, and checks the image stays inside. Returns the
    worst signed margin (negative = violation).
    """
    rng = np.random.default_rng(seed)
    A_K = np.atleast_2d(np.asarray(A_K, dtype=float))
    B_w = np.atleast_2d(np.asarray(B_w, dtype=float))
    w_bar = np.atleast_1d(np.asarray(w_bar, dtype=float))
    n = omega.dim
    active = np.nonzero(w_bar > 0.0)[0]
    signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * len(active)))).T.reshape(-1, len(active)) \
        if len(active) else np.zeros((1, 0))
    w_vertices = np.zeros((signs.shape[0], w_bar.shape[0]))
    w_vertices[:, active] = signs * w_bar[active]

    # boundary points: random V-coordinates with at least one coordinate
    # pinned to its radius
    xi = rng.uniform(-1.0, 1.0, size=(n_samples, n)) * omega.radius
    pin = rng.integers(0, n, size=n_samples)
    xi[np.arange(n_samples), pin] = (rng.choice([-1.0, 1.0], n_samples)
                                     * omega.radius[pin])
    pts = xi @ omega.V.T

    worst = np.inf
    for wv in w_vertices:
        img = pts @ A_K.T + (B_w @ wv)[None, :]
        margin = omega.radius[None, :] - np.abs(img @ omega.V_inv.T)
        worst = min(worst, float(margin.min()))
    return worst


def control_supports(K_core, omega):
    """Per-control support s_i = h_Omega(K_i): the tube correction budget."""
    K_core = np.atleast_2d(np.asarray(K_core, dtype=float))
    return np.array([omega.support(row) for row in K_core])


def tightened_boxes(X, U, gain, omega, layout):
    """Separated-form tightening of the scenario's state and control boxes.

    Core coordinates (flows, temperatures, delay registers) shrink by the
    tube's interval-hull widths; the battery-power state shrinks by the
    battery row's tube correction budget s_1 = h_Omega(K_batt) because the
    applied control deviates from the plan by at most that much in one
    step; the exactly-planned bookkeeping states (E_batt, l_curt) keep
    their physical bounds. Controls shrink per channel by h_Omega(K_i).
    Returns (X_tightened, U_tightened) as boxes.
    """
    from .polytope import Box, pontryagin_diff_box

    widths = omega.state_widths()
    s = control_supports(gain.K_core, omega)
    hull = np.zeros(layout.n)
    hull[gain.core_idx] = widths
    hull[layout.u_batt] = s[0]
    X_t = pontryagin_diff_box(X, Box.symmetric(hull))
    U_t = pontryagin_diff_box(U, Box.symmetric(s))
    if X_t.is_empty or U_t.is_empty:
        raise ValueError("disturbance set too large for constraints: "
                         "tightening emptied the admissible set")
    return X_t, U_t


def tighten_constraints(P, K, omega):
    """P (-) [I; K] Omega for a mixed (x, u) constraint polytope.

    Each facet (n_x, n_u) loses the support of the mapped tube:
    h_Omega(n_x + K' n_u). Facets touching only x reproduce X (-) Omega;
    facets touching only u reproduce U (-) K Omega, so the separated form
    is this same operation on a block-assembled P.
    """
    K_mat = K.K_core if isinstance(K, FeedbackGain) else np.atleast_2d(np.asarray(K, float))
    n_x = omega.dim
    n_u = K_mat.shape[0]
    if K_mat.shape[1] != n_x:
        raise ValueError("K column count must match the tube dimension")
    if P.dim != n_x + n_u:
        raise ValueError(f"P must live on (x, u) with dim {n_x + n_u}, "
                         f"got {P.dim}")
    drops = np.empty(P.n_facets)
    for i, row in enumerate(P.normals):
        d = row[:n_x] + K_mat.T @ row[n_x:]
        drops[i] = omega.support(d)
    offsets = P.offsets - drops
    # empty iff some pair of antiparallel facets crossed (all constraint
    # polytopes assembled here are box-structured, so this test is exact)
    for i in range(P.n_facets):
        for j in range(i + 1, P.n_facets):
            if np.allclose(P.normals[i], -P.normals[j]):
                if offsets[i] + offsets[j] < 0.0:
                    raise ValueError(
                        "disturbance set too large for constraints: "
                        "tightening emptied the admissible set")
    return HPolytope(P.normals, offsets)
