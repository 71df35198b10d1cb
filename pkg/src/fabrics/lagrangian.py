"""Euler-Lagrange machinery: mass/force extraction, solved accelerations,
Hamiltonians and action integrals for arbitrary Lagrangians."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import ScalarField, evaluate_jet
from .integrate import Trajectory
from .linalg import SingularMassError
from .state import State

__all__ = [
    "EomTerms",
    "ActionValue",
    "eom_terms",
    "solved_acceleration",
    "hamiltonian",
    "action",
    "SingularMassError",
]

MASS_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class EomTerms:
    """Second-order equation-of-motion terms: mass @ xddot + force = 0."""

    mass: np.ndarray
    force: np.ndarray


@dataclass(frozen=True)
class ActionValue:
    """Integral of a Lagrangian along a trajectory (composite trapezoid)."""

    value: float


def eom_terms(L: ScalarField, s: State) -> EomTerms:
    """Mass matrix (velocity Hessian) and force vector of ``L`` at ``s``.

    mass = d2L/dxdot2, force = (d2L/dxdot dx) @ xdot - dL/dx, so that
    trajectories of the variational problem satisfy mass @ xddot + force = 0.
    """
    jet = evaluate_jet(L, s)
    force = jet.hess_vx @ s.xdot - jet.grad_x
    return EomTerms(mass=jet.hess_vv, force=force)


def solved_acceleration(t: EomTerms, cond_limit: float = MASS_CONDITION_LIMIT) -> np.ndarray:
    """Acceleration solving mass @ xddot + force = 0.

    Raises:
        SingularMassError: when the mass matrix condition exceeds the limit,
            as happens structurally for rank-deficient geometric masses;
            callers must then work with the energy form instead.
    """
    cond = float(np.linalg.cond(t.mass))
    if not np.isfinite(cond) or cond >= cond_limit:
        raise SingularMassError(cond, "solved acceleration")
    xddot = np.linalg.solve(t.mass, -t.force)
    residual = float(np.max(np.abs(t.mass @ xddot + t.force)))
    bound = 1e-9 * (1.0 + float(np.max(np.abs(t.force), initial=0.0)))
    if residual > bound:
        raise SingularMassError(cond, f"solve residual {residual:.3e} exceeds {bound:.3e}")
    return xddot


def hamiltonian(L: ScalarField, s: State) -> float:
    """Legendre-dual energy dL/dxdot . xdot - L.

    For a Lagrangian positively homogeneous of degree k in velocity this
    equals (k-1) L, so degree-2 energies are their own Hamiltonian and
    degree-1 length elements have Hamiltonian zero.
    """
    jet = evaluate_jet(L, s)
    return float(jet.grad_v @ s.xdot - jet.value)


def action(L: ScalarField, traj: Trajectory) -> ActionValue:
    """Trapezoid quadrature of ``L`` over the trajectory's own samples."""
    if len(traj) < 2:
        raise ValueError("action needs a trajectory with at least two samples")
    values = np.array([L(s) for s in traj.states])
    dt = np.diff(traj.times)
    return ActionValue(float(np.sum(0.5 * dt * (values[:-1] + values[1:]))))
