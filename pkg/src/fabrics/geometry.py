"""Generalized nonlinear geometries: degree-2 homogeneous acceleration
fields, their generating/explicit equations, time reparameterization, and
path-equivalence metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .integrate import Trajectory
from .state import State

__all__ = [
    "GeometryHandle",
    "AlphaProfile",
    "PathPolyline",
    "HomogeneityReport",
    "ZeroVelocityError",
    "BarrierDomainError",
    "ReparameterizationError",
    "DegenerateTrajectoryError",
    "project_perp",
    "homogeneity_violation",
    "check_homogeneity",
    "generating_acceleration",
    "explicit_acceleration",
    "reparameterize",
    "resample_arclength",
    "path_distance",
    "circle_barrier_geometry",
    "circle_distance_field",
]

#: scale factors used by homogeneity checks: one contraction, one dyadic,
#: one irrational to catch accidental degree coincidences
HOMOGENEITY_SCALES = (0.5, 2.0, 7.3)


class ZeroVelocityError(ValueError):
    pass


class BarrierDomainError(ValueError):
    """Evaluated a barrier geometry on or inside its obstacle."""

    def __init__(self, position: np.ndarray, phi: float):
        self.position = np.asarray(position, dtype=float)
        self.phi = phi
        super().__init__(
            f"barrier distance {phi:.6g} <= 0 at position {self.position.tolist()}"
        )


class ReparameterizationError(RuntimeError):
    """The retiming ODE blew up (dt/ds collapsed or diverged)."""

    def __init__(self, s: float, dtds: float):
        self.s = s
        self.dtds = dtds
        super().__init__(f"reparameterization dt/ds = {dtds:.3e} at s = {s:.6g}")


class DegenerateTrajectoryError(ValueError):
    pass


@dataclass(frozen=True)
class GeometryHandle:
    """A second-order acceleration field with a declared homogeneity degree.

    ``h2`` maps a state to an n-vector; for a genuine geometry it is
    positively homogeneous of degree 2 in velocity and vanishes at zero
    velocity (the stationary convention).
    """

    dim: int
    h2: Callable[[State], np.ndarray]
    declared_degree: int = 2
    label: str = ""


@dataclass(frozen=True)
class AlphaProfile:
    """A smooth scalar acceleration profile along the direction of motion."""

    alpha: Callable[[float], float]
    label: str = ""


def project_perp(xdot: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Component of ``v`` orthogonal to the velocity direction."""
    xdot = np.asarray(xdot, dtype=float)
    v = np.asarray(v, dtype=float)
    norm2 = float(xdot @ xdot)
    if norm2 == 0.0:
        raise ZeroVelocityError("cannot project orthogonally to a zero velocity")
    return v - xdot * (float(xdot @ v) / norm2)


@dataclass(frozen=True)
class HomogeneityReport:
    degree: int
    max_violation: float
    worst_sample: State | None
    worst_scale: float | None

    def ok(self, tol: float = 1e-10) -> bool:
        return self.max_violation <= tol


def homogeneity_violation(fn: Callable[[State], object], samples: Sequence[State],
                          degree: int,
                          scales: Sequence[float] = HOMOGENEITY_SCALES,
                          ) -> HomogeneityReport:
    """Largest relative violation of f(x, c*v) = c^degree f(x, v).

    Works for scalar, vector, and matrix valued maps alike; the relative
    measure is ||f(x, c v) - c^d f(x, v)|| / (1 + ||c^d f(x, v)||).
    """
    worst = 0.0
    worst_sample = None
    worst_scale = None
    for s in samples:
        base = np.asarray(fn(s), dtype=float)
        for c in scales:
            scaled = np.asarray(fn(State(s.x, c * s.xdot)), dtype=float)
            ref = c ** degree * base
            viol = float(np.linalg.norm(scaled - ref) / (1.0 + np.linalg.norm(ref)))
            if viol > worst:
                worst = viol
                worst_sample = s
                worst_scale = c
    return HomogeneityReport(degree, worst, worst_sample, worst_scale)


def check_homogeneity(g: GeometryHandle, samples: Sequence[State], degree: int = 2,
                      ) -> HomogeneityReport:
    """Sampled homogeneity check of a geometry's acceleration field."""
    for s in samples:
        if s.speed() == 0.0:
            raise ZeroVelocityError("homogeneity samples need nonzero velocities")
    return homogeneity_violation(g.h2, samples, degree)


def generating_acceleration(g: GeometryHandle, s: State) -> np.ndarray:
    """Acceleration of the generating equation xddot + h2 = 0."""
    return -np.asarray(g.h2(s), dtype=float)


def explicit_acceleration(g: GeometryHandle, s: State, a: float) -> np.ndarray:
    """Acceleration of the explicit form xddot + h2 + a xdot = 0."""
    return -np.asarray(g.h2(s), dtype=float) - a * s.xdot


def reparameterize(traj: Trajectory, profile: AlphaProfile,
                   floor: float = 1e-8, ceiling: float = 1e8) -> Trajectory:
    """Retime a trajectory through the clock ODE t'' + alpha(s) t' = 0.

    The ODE is integrated on the trajectory's own sample grid with initial
    conditions t(s0) = s0, t'(s0) = 1, and the samples are re-stamped:
    positions are untouched, velocities divide by t'(s), so the output
    traces exactly the same path.

    Raises:
        ReparameterizationError: if t' leaves [floor, ceiling] on the grid.
    """
    if len(traj) < 2:
        raise DegenerateTrajectoryError("reparameterize needs at least two samples")
    alpha = profile.alpha
    s_grid = traj.times
    t = float(s_grid[0])
    u = 1.0
    new_times = [t]
    us = [u]
    for k in range(len(s_grid) - 1):
        s = float(s_grid[k])
        h = float(s_grid[k + 1] - s_grid[k])
        # RK4 on (t, u)' = (u, -alpha(s) u)
        k1t, k1u = u, -alpha(s) * u
        k2t = u + 0.5 * h * k1u
        k2u = -alpha(s + 0.5 * h) * k2t
        k3t = u + 0.5 * h * k2u
        k3u = -alpha(s + 0.5 * h) * k3t
        k4t = u + h * k3u
        k4u = -alpha(s + h) * k4t
        t += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        if not (floor < u < ceiling) or not math.isfinite(u):
            raise ReparameterizationError(float(s_grid[k + 1]), u)
        new_times.append(t)
        us.append(u)
    us_arr = np.array(us)
    states = [State(st.x, st.xdot / uk) for st, uk in zip(traj.states, us_arr)]
    diags = dict(traj.diagnostics)
    diags["dtds"] = us_arr
    diags["d2tds2"] = np.array([-alpha(float(s)) * uk for s, uk in zip(s_grid, us_arr)])
    return Trajectory(np.array(new_times), states, diags, traj.stop_reason)


# ---- path-equivalence metric ------------------------------------------------


@dataclass(frozen=True)
class PathPolyline:
    """Equivalence-class representative of a path: points resampled to
    uniform arc length along the source polyline."""

    points: np.ndarray
    total_length: float

    @classmethod
    def from_points(cls, points: np.ndarray, samples: int = 1024) -> "PathPolyline":
        resampled, length = resample_arclength(points, samples)
        return cls(resampled, length)

    @classmethod
    def from_trajectory(cls, traj: Trajectory, samples: int = 1024) -> "PathPolyline":
        return cls.from_points(traj.positions(), samples)


def resample_arclength(points: np.ndarray, samples: int) -> tuple[np.ndarray, float]:
    """Resample a polyline at uniform arc-length spacing.

    Raises:
        DegenerateTrajectoryError: for fewer than two points or zero length.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise DegenerateTrajectoryError("need at least two points to resample")
    if samples < 2:
        raise ValueError("need at least two resample points")
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    length = float(cum[-1])
    if length <= 0.0:
        raise DegenerateTrajectoryError("zero-length path")
    targets = np.linspace(0.0, length, samples)
    out = np.empty((samples, points.shape[1]))
    for d in range(points.shape[1]):
        out[:, d] = np.interp(targets, cum, points[:, d])
    return out, length


def path_distance(a: Trajectory, b: Trajectory, m: int = 1024) -> float:
    """Max pointwise distance between arc-length aligned resamplings.

    For same-orientation trajectories of a common path this is a tight
    upper bound on the Frechet distance and costs O(m).
    """
    pa, _ = resample_arclength(a.positions(), m)
    pb, _ = resample_arclength(b.positions(), m)
    return float(np.max(np.linalg.norm(pa - pb, axis=1)))


# ---- circular-obstacle barrier geometry -------------------------------------


def circle_distance_field(center, radius: float) -> Callable[[State], float]:
    """Normalized distance to a circular obstacle: (||x - c|| - r) / r."""
    c = np.asarray(center, dtype=float)
    r = float(radius)

    def phi(s: State) -> float:
        d = s.x - c
        return (math.sqrt(float(d @ d)) - r) / r

    return phi


def circle_barrier_geometry(center, radius: float, lam: float, k: float,
                            ) -> GeometryHandle:
    """Obstacle-avoiding geometry h2 = lam ||xdot||^2 grad(k / phi^2).

    phi is the normalized obstacle distance; the repulsion strengthens as
    the barrier term k/phi^2 grows near the obstacle, and the squared-speed
    factor makes the field homogeneous of degree 2 by construction.

    Raises:
        BarrierDomainError: when evaluated at phi <= 0 (on or inside the
            obstacle); penetration must be loud, never clamped.
    """
    c = np.asarray(center, dtype=float)
    r = float(radius)
    if r <= 0.0 or lam <= 0.0 or k <= 0.0:
        raise ValueError("radius, lambda and k must all be positive")

    def h2(s: State) -> np.ndarray:
        d = s.x - c
        dist = math.sqrt(float(d @ d))
        phi = (dist - r) / r
        if phi <= 0.0:
            raise BarrierDomainError(s.x, phi)
        sq = float(s.xdot @ s.xdot)
        if sq == 0.0:
            return np.zeros_like(d)
        # grad psi(phi) = -2k/phi^3 * (x - c) / (r ||x - c||)
        coef = lam * sq * (-2.0 * k / phi**3) / (r * dist)
        return coef * d

    return GeometryHandle(dim=c.shape[0], h2=h2,
                          label=f"circle_barrier(r={r:g},lam={lam:g},k={k:g})")
