"""Finsler structures and their energy forms: axiom validation, momentum
identities, the geodesic generator, and the dual-route geometric terms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .autodiff import ScalarField, evaluate_jet
from .geometry import GeometryHandle, ZeroVelocityError, homogeneity_violation
from .lagrangian import eom_terms
from .linalg import solve_spd, symmetric_condition
from .state import State

__all__ = [
    "VELOCITY_FLOOR",
    "FinslerStructure",
    "EnergyTerms",
    "GeometricTerms",
    "FinslerValidation",
    "DualRouteMismatch",
    "make_finsler",
    "validate_finsler",
    "energy_terms",
    "geodesic_geometry",
    "geometric_terms",
    "verify_theorem2",
    "Theorem2Report",
]

#: below this speed the degree-1 cusp is genuine; geometry handles return
#: zero acceleration (stationary convention) and term extraction refuses
VELOCITY_FLOOR = 1e-9

#: sampled condition-number ceiling for an acceptable energy tensor
ENERGY_CONDITION_LIMIT = 1e10


class DualRouteMismatch(RuntimeError):
    """The derivative route and the closed-form route disagree."""

    def __init__(self, what: str, violation: float, tol: float):
        self.violation = violation
        super().__init__(f"{what}: routes differ by {violation:.3e} (tolerance {tol:.1e})")


@dataclass(frozen=True)
class FinslerStructure:
    """A generalized length element paired with its energy form.

    ``lg`` is the degree-1 structure, ``le`` the derived degree-2 energy
    le = lg^2 / 2, composed symbolically at the field level so jets of
    either can be taken anywhere the structure is smooth.
    """

    lg: ScalarField
    le: ScalarField
    dim: int


def make_finsler(lg: ScalarField) -> FinslerStructure:
    """Wrap a candidate length element; validation is a separate, sampled step."""
    lg_eval = lg.eval

    def le_eval(x, v):
        g = lg_eval(x, v)
        return 0.5 * g * g

    le = ScalarField(lg.arity, le_eval, name=f"{lg.name or 'structure'}~energy")
    return FinslerStructure(lg=lg, le=le, dim=lg.arity)


@dataclass(frozen=True)
class FinslerValidation:
    """Per-axiom worst violations over a sample set.

    positivity: how far lg dips below zero at nonzero velocity;
    homogeneity: worst relative degree-1 scaling violation of lg;
    energy_condition: worst condition number of the energy tensor.
    """

    positivity: float
    homogeneity: float
    energy_condition: float
    samples: int

    def ok(self, tol: float = 1e-10,
           cond_limit: float = ENERGY_CONDITION_LIMIT) -> bool:
        return (self.positivity <= tol and self.homogeneity <= tol
                and self.energy_condition < cond_limit)


def validate_finsler(f: FinslerStructure, samples: Sequence[State]) -> FinslerValidation:
    """Check the three structure axioms on a sample set; failures are report
    entries, never exceptions."""
    positivity = 0.0
    worst_cond = 1.0
    for s in samples:
        if s.speed() == 0.0:
            raise ZeroVelocityError("validation samples need nonzero velocities")
        val = f.lg(s)
        positivity = max(positivity, -val)
        jet = evaluate_jet(f.le, s)
        worst_cond = max(worst_cond, symmetric_condition(jet.hess_vv))
    hom = homogeneity_violation(lambda s: f.lg(s), samples, degree=1)
    return FinslerValidation(
        positivity=positivity,
        homogeneity=hom.max_violation,
        energy_condition=worst_cond,
        samples=len(samples),
    )


@dataclass(frozen=True)
class EnergyTerms:
    """Energy-form bundle at a state: tensor, force, momentum, energy."""

    me: np.ndarray
    fe: np.ndarray
    pe: np.ndarray
    le: float


def energy_terms(f: FinslerStructure, s: State) -> EnergyTerms:
    """Extract (M_e, f_e, p_e, L_e) from the energy form at ``s``.

    The momentum identity p_e = M_e xdot and the three equivalent energy
    expressions hold for any valid structure because the energy is exactly
    degree-2 homogeneous by construction.
    """
    if s.speed() < VELOCITY_FLOOR:
        raise ZeroVelocityError("energy terms need speed above the velocity floor")
    jet = evaluate_jet(f.le, s)
    fe = jet.hess_vx @ s.xdot - jet.grad_x
    return EnergyTerms(me=jet.hess_vv, fe=fe, pe=jet.grad_v.copy(), le=jet.value)


def geodesic_geometry(f: FinslerStructure) -> GeometryHandle:
    """The generator xddot + Me^-1 fe = 0 as a degree-2 geometry handle.

    Returns zero acceleration below the velocity floor; raises the
    singular-tensor diagnostic if the energy tensor degenerates at runtime
    (an axiom-3 violation surfacing late).
    """

    def h2(s: State) -> np.ndarray:
        if s.speed() < VELOCITY_FLOOR:
            return np.zeros(f.dim)
        t = energy_terms(f, s)
        return solve_spd(t.me, t.fe, cond_limit=ENERGY_CONDITION_LIMIT,
                         context="energy tensor")

    return GeometryHandle(dim=f.dim, h2=h2, label=f"geodesic[{f.lg.name}]")


@dataclass(frozen=True)
class GeometricTerms:
    """Structure-side terms plus the two restriction matrices.

    mg and fg come from differentiating the structure itself; rxd and rpe
    are the closed-form factors (momentum-deflated tensor and
    velocity-deflated inverse) tying them back to the energy form.
    """

    mg: np.ndarray
    fg: np.ndarray
    rxd: np.ndarray
    rpe: np.ndarray


def geometric_terms(f: FinslerStructure, s: State, tol: float = 1e-8) -> GeometricTerms:
    """Compute mg, fg two independent ways and insist they agree.

    Route (a) differentiates the length element directly; route (b) builds
    the closed forms mg = rxd / lg and fg = Me rpe fe / lg from the energy
    bundle. Disagreement beyond ``tol`` (relative) raises, turning the
    equivalence argument into a permanent regression check.
    """
    if s.speed() < VELOCITY_FLOOR:
        raise ZeroVelocityError("geometric terms need speed above the velocity floor")
    terms_a = eom_terms(f.lg, s)
    et = energy_terms(f, s)
    lg_val = math.sqrt(2.0 * et.le)
    if lg_val <= 0.0:
        raise ZeroVelocityError("structure value must be positive")

    me_inv = np.linalg.inv(et.me)
    pe = et.pe
    xd = s.xdot
    rxd = et.me - np.outer(pe, pe) / float(pe @ me_inv @ pe)
    rpe = me_inv - np.outer(xd, xd) / float(xd @ et.me @ xd)
    mg_closed = rxd / lg_val
    fg_closed = et.me @ (rpe @ et.fe) / lg_val

    mg_dev = float(np.linalg.norm(terms_a.mass - mg_closed)
                   / (1.0 + np.linalg.norm(mg_closed)))
    if mg_dev > tol:
        raise DualRouteMismatch("geometric mass", mg_dev, tol)
    fg_dev = float(np.linalg.norm(terms_a.force - fg_closed)
                   / (1.0 + np.linalg.norm(fg_closed)))
    if fg_dev > tol:
        raise DualRouteMismatch("geometric force", fg_dev, tol)
    return GeometricTerms(mg=terms_a.mass, fg=terms_a.force, rxd=rxd, rpe=rpe)


@dataclass(frozen=True)
class Theorem2Report:
    max_residual: float
    identity_violation: float
    trials: int

    def ok(self, tol: float = 1e-8) -> bool:
        return self.max_residual <= tol and self.identity_violation <= tol


def verify_theorem2(f: FinslerStructure, s: State, trials: int = 10,
                    seed: int = 0) -> Theorem2Report:
    """Check that the energy generator plus any along-velocity acceleration
    solves the structure's own equations of motion.

    For random scalars a, the acceleration xddot = -Me^-1 fe - a xdot must
    satisfy mg xddot + fg = 0; the restriction matrices must also satisfy
    Me rpe Me = rxd. Violations are reported, not raised.
    """
    rng = np.random.default_rng(seed)
    gt = geometric_terms(f, s)
    et = energy_terms(f, s)
    base = solve_spd(et.me, et.fe, cond_limit=ENERGY_CONDITION_LIMIT,
                     context="energy tensor")
    scale = 1.0 + float(np.linalg.norm(gt.fg))
    worst = 0.0
    # always include the pure geodesic and one fixed large coefficient
    coefficients = [0.0, 5.0] + list(rng.uniform(-5.0, 5.0, size=trials))
    for a in coefficients:
        xddot = -base - a * s.xdot
        residual = float(np.linalg.norm(gt.mg @ xddot + gt.fg)) / scale
        worst = max(worst, residual)
    ident = float(np.linalg.norm(et.me @ gt.rpe @ et.me - gt.rxd)
                  / (1.0 + np.linalg.norm(gt.rxd)))
    return Theorem2Report(max_residual=worst, identity_violation=ident, trials=trials)
