"""Controller artifacts: versioned structured-text serialization.

A synthesized tube controller (gain K, invariant set Omega, tightened
constraint boxes, MPC configuration) is written to a JSON file whose
matrices are stored as row-major number lists. The artifact embeds the
content hash of the scenario it was synthesized from; loading checks
that hash so a stale Omega can never silently run against edited
constraints.

Loading also re-certifies the invariant set algebraically (the Kofman
fixed-point inequality), so a corrupted or hand-edited artifact fails
loudly instead of producing an unsound tube.
"""

import json

import numpy as np

from . import ltimodel, mpc, polytope, robust, scenario, sim

ARTIFACT_VERSION = "1"
ARTIFACT_KIND = "linetemp-controller"


class ArtifactError(ValueError):
    """Artifact load/validation failure."""


def _mat(a):
    a = np.asarray(a, dtype=float)
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]),
            "data": [float(x) for x in a.ravel(order="C")]}


def _unmat(obj, what):
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        data = np.asarray(obj["data"], dtype=float)
    except (KeyError, TypeError, ValueError) as ex:
        raise ArtifactError(f"{what}: malformed matrix entry") from ex
    if data.shape != (rows * cols,):
        raise ArtifactError(
            f"{what}: expected {rows * cols} entries, got {data.size}")
    return data.reshape(rows, cols)


def _vec(a):
    return [float(x) for x in np.asarray(a, dtype=float)]


def _unvec(obj, what, length=None):
    try:
        v = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as ex:
        raise ArtifactError(f"{what}: malformed number list") from ex
    if v.ndim != 1 or (length is not None and v.size != length):
        raise ArtifactError(f"{what}: expected a flat list"
                            + (f" of {length}" if length else ""))
    return v


def _box(b):
    return {"lower": _vec(b.lower), "upper": _vec(b.upper)}


def _unbox(obj, what, dim):
    if not isinstance(obj, dict):
        raise ArtifactError(f"{what}: missing box")
    return polytope.Box(lower=_unvec(obj.get("lower"), f"{what}.lower", dim),
                        upper=_unvec(obj.get("upper"), f"{what}.upper", dim))


def save_controller(path, controller, scenario_sha, report=None):
    """Write a tube controller to a versioned artifact file.

    `report` (a JSON-safe mapping, e.g. the synthesis report) is stored
    verbatim for later inspection.
    """
    lay = controller.sys.layout
    doc = {
        "artifact_version": ARTIFACT_VERSION,
        "kind": ARTIFACT_KIND,
        "scenario_sha256": scenario_sha,
        "layout": {"n_lines": int(lay.n_l), "n_sites": int(lay.n_g)},
        "P_bar_MW": float(controller.P_bar_MW),
        "mpc": {
            "N": int(controller.cfg.N),
            "Q_cost": _vec(controller.cfg.Q_cost),
            "norm": controller.cfg.norm,
            "epsilon_x0": float(controller.cfg.epsilon_x0),
            "max_iter": int(controller.cfg.max_iter),
        },
        "gain": {
            "K": _mat(controller.gain.K),
            "core_idx": [int(i) for i in controller.gain.core_idx],
            "closed_loop_eigs": _vec(controller.gain.closed_loop_eigs),
        },
        "omega": {
            "V": _mat(controller.omega.V),
            "V_inv": _mat(controller.omega.V_inv),
            "radius": _vec(controller.omega.radius),
            "theta": _vec(np.broadcast_to(controller.omega.theta,
                                          controller.omega.radius.shape)),
            "eigs": _vec(controller.omega.eigs),
        },
        "boxes": {
            "X": _box(controller.X),
            "U": _box(controller.U),
            "X_tightened": _box(controller.X_t),
            "U_tightened": _box(controller.U_t),
        },
    }
    if report is not None:
        doc["report"] = report
    text = json.dumps(doc, indent=1, sort_keys=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def load_controller(path, scn, scenario_sha):
    """Load a controller artifact and bind it to a validated scenario.

    Checks the artifact version and the embedded scenario hash, rebuilds
    the LTI system from the scenario, validates every stored shape, and
    re-certifies the invariant set before returning. Returns
    (TubeController, stored report or None).
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as ex:
        raise ArtifactError(f"artifact is not valid JSON: {ex}") from ex
    if not isinstance(doc, dict) or doc.get("kind") != ARTIFACT_KIND:
        raise ArtifactError("file is not a controller artifact")
    if doc.get("artifact_version") != ARTIFACT_VERSION:
        raise ArtifactError(
            f"unsupported artifact version {doc.get('artifact_version')!r}"
            f" (expected {ARTIFACT_VERSION!r})")
    stored = doc.get("scenario_sha256")
    if stored != scenario_sha:
        raise ArtifactError(
            "scenario hash mismatch: artifact was synthesized from "
            f"{str(stored)[:12]}… but the given scenario hashes to "
            f"{scenario_sha[:12]}…; re-run synthesis")

    lay_doc = doc.get("layout") or {}
    if (lay_doc.get("n_lines"), lay_doc.get("n_sites")) != (scn.n_lines,
                                                            scn.n_sites):
        raise ArtifactError("artifact layout does not match the scenario")

    _, _, _, sys_m = scenario.system_matrices(scn)
    lay = sys_m.layout
    n, n_u = lay.n, lay.n_u
    n_core = len(ltimodel.core_indices(lay))

    m = doc.get("mpc") or {}
    try:
        cfg = mpc.MpcConfig(N=int(m["N"]),
                            Q_cost=tuple(float(q) for q in m["Q_cost"]),
                            norm=str(m["norm"]),
                            epsilon_x0=float(m["epsilon_x0"]),
                            max_iter=int(m["max_iter"]))
    except (KeyError, TypeError, ValueError) as ex:
        raise ArtifactError(f"mpc block invalid: {ex}") from ex

    g = doc.get("gain") or {}
    K = _unmat(g.get("K"), "gain.K")
    if K.shape != (n_u, n):
        raise ArtifactError(f"gain.K: expected shape ({n_u}, {n}), "
                            f"got {K.shape}")
    core_idx = np.asarray(g.get("core_idx", ()), dtype=int)
    if core_idx.size != n_core:
        raise ArtifactError("gain.core_idx: wrong length")
    try:
        gain = robust.FeedbackGain(
            K=K, core_idx=core_idx,
            closed_loop_eigs=_unvec(g.get("closed_loop_eigs"),
                                    "gain.closed_loop_eigs", n_core))
    except ValueError as ex:
        raise ArtifactError(f"gain block invalid: {ex}") from ex

    o = doc.get("omega") or {}
    try:
        omega = robust.RPISet(
            V_inv=_unmat(o.get("V_inv"), "omega.V_inv"),
            radius=_unvec(o.get("radius"), "omega.radius", n_core),
            theta=_unvec(o.get("theta"), "omega.theta", n_core),
            V=_unmat(o.get("V"), "omega.V"),
            eigs=_unvec(o.get("eigs"), "omega.eigs", n_core))
    except ValueError as ex:
        raise ArtifactError(f"omega block invalid: {ex}") from ex
    if omega.V.shape != (n_core, n_core) or omega.V_inv.shape != (n_core,
                                                                  n_core):
        raise ArtifactError("omega: V / V_inv must be square on the core")

    bx = doc.get("boxes") or {}
    X = _unbox(bx.get("X"), "boxes.X", n)
    U = _unbox(bx.get("U"), "boxes.U", n_u)
    X_t = _unbox(bx.get("X_tightened"), "boxes.X_tightened", n)
    U_t = _unbox(bx.get("U_tightened"), "boxes.U_tightened", n_u)

    _recertify(sys_m, gain, omega)

    controller = sim.TubeController(
        sys=sys_m, gain=gain, omega=omega, X=X, U=U, X_t=X_t, U_t=U_t,
        cfg=cfg, P_bar_MW=float(doc.get("P_bar_MW", 0.0)))
    return controller, doc.get("report")


def _recertify(sys_m, gain, omega):
    """Exact algebraic re-check of the invariance certificate.

    For Omega = {x : |V_inv x| <= r} and x+ = A_K x + w with |w| <= w_c,
    invariance holds if  |V_inv A_K V| r + |V_inv| w_c <= r  elementwise
    (interval arithmetic in V-coordinates). A stored set that fails this
    is unsound and must not be used.
    """
    A_c, B_c, w_c, _ = ltimodel.core_subsystem(sys_m)
    A_K = A_c + B_c @ gain.K_core
    pushed = (np.abs(omega.V_inv @ A_K @ omega.V) @ omega.radius
              + np.abs(omega.V_inv) @ w_c)
    slack = omega.radius - pushed
    if np.any(slack < -1e-12):
        raise ArtifactError(
            "stored invariant set failed re-certification "
            f"(worst slack {slack.min():.3e}); the artifact does not match "
            "this scenario's dynamics — re-run synthesis")
