"""Robust temperature control for overhead transmission lines.

Real-time management of line temperatures with a battery and generation
curtailment: conductor heat-balance physics, a PTDF network model, a
linearized prediction model, tube MPC synthesis (pole placement + Kofman
robust invariant set + constraint tightening), a nominal QP controller,
a closed-loop simulator against the nonlinear plant, and a scenario/
artifact/CLI layer for reproducible runs.
"""

from . import (artifact, cli, grid, ltimodel, mpc, output, polytope, robust,
               scenario, sim, thermal)

__all__ = [
    "artifact",
    "cli",
    "grid",
    "ltimodel",
    "mpc",
    "output",
    "polytope",
    "robust",
    "scenario",
    "sim",
    "thermal",
]

__version__ = "0.1.0"
