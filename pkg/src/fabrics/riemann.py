"""Riemannian geometry as the closed-form special case and independent
oracle for the generic Finsler machinery."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autodiff import HyperDual, ScalarField, sqrt
from .finsler import FinslerStructure, make_finsler
from .linalg import spd_sqrt
from .state import State

__all__ = [
    "MetricField",
    "quadratic_form",
    "riemannian_structure",
    "closed_form_mg",
    "fictitious_force",
]


@dataclass(frozen=True)
class MetricField:
    """A smoothly varying symmetric positive definite matrix over positions.

    ``g(x)`` must accept generic scalars (floats or jet scalars) and return
    an n x n nested sequence built from them, so the metric can be
    differentiated entrywise.
    """

    dim: int
    g: Callable
    name: str = ""

    def matrix(self, x) -> np.ndarray:
        rows = self.g(np.asarray(x, dtype=float))
        return np.array([[float(e) for e in row] for row in rows])


def quadratic_form(G, v):
    """v . G v over generic scalars."""
    out = None
    for i, row in enumerate(G):
        for j, entry in enumerate(row):
            term = entry * v[i] * v[j]
            out = term if out is None else out + term
    return out


def riemannian_structure(m: MetricField) -> FinslerStructure:
    """Length element sqrt(xdot . G(x) xdot); its energy tensor is G itself."""

    def lg_eval(x, v):
        return sqrt(quadratic_form(m.g(x), v))

    lg = ScalarField(m.dim, lg_eval, name=f"riemann[{m.name or 'G'}]")
    return make_finsler(lg)


def closed_form_mg(m: MetricField, s: State) -> np.ndarray:
    """Structure-side mass via the metric square root.

    With v = G^(1/2) xdot, the closed form is
    (1/||xdot||_G) G^(1/2) (I - vhat vhat^T) G^(1/2): rank n-1 with null
    space spanned by the velocity.
    """
    if s.speed() == 0.0:
        raise ValueError("closed-form geometric mass needs a nonzero velocity")
    G = m.matrix(s.x)
    root = spd_sqrt(G, context="riemannian metric")
    v = root @ s.xdot
    vnorm = float(np.linalg.norm(v))
    vhat = v / vnorm
    proj = np.eye(m.dim) - np.outer(vhat, vhat)
    return (root @ proj @ root) / vnorm


def _metric_partials(m: MetricField, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Metric value and its n entrywise position derivatives via jet seeds."""
    n = m.dim
    G0 = np.empty((n, n))
    dG = np.empty((n, n, n))  # dG[k] = dG/dx_k
    cells = [HyperDual(float(xk)) for xk in x]
    for k in range(n):
        cells[k].fa = 1.0
        rows = m.g(cells)
        for i in range(n):
            for j in range(n):
                e = rows[i][j]
                if isinstance(e, HyperDual):
                    dG[k, i, j] = e.fa
                    if k == 0:
                        G0[i, j] = e.f
                else:
                    dG[k, i, j] = 0.0
                    if k == 0:
                        G0[i, j] = float(e)
        cells[k].fa = 0.0
    return G0, dG


def fictitious_force(m: MetricField, s: State) -> np.ndarray:
    """Velocity-product force of the kinetic-energy Lagrangian.

    Assembled directly from metric derivatives:
    f_i = sum_jk dG_ij/dx_k v_j v_k - 1/2 sum_jk dG_jk/dx_i v_j v_k,
    capturing the Coriolis/centripetal terms of the equivalent mechanical
    system. Homogeneous of degree 2 in velocity.
    """
    _, dG = _metric_partials(m, s.x)
    v = s.xdot
    n = m.dim
    out = np.empty(n)
    for i in range(n):
        first = 0.0
        for k in range(n):
            first += float(dG[k, i] @ v) * v[k]
        second = 0.5 * float(v @ dG[i] @ v)
        out[i] = first - second
    return out
