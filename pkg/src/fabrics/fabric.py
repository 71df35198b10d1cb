"""Geometric fabrics: behavior components paired with priority energies,
zero-work energization, metric-weighted combination, and potential forcing.

The wall/vortex/attractor component forms are original to this library;
their parameters live in scenario files so runs reproduce exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autodiff import ScalarField, norm
from .finsler import (VELOCITY_FLOOR, EnergyTerms, FinslerStructure,
                      energy_terms, make_finsler)
from .geometry import (BarrierDomainError, GeometryHandle,
                       circle_barrier_geometry)
from .linalg import solve_spd
from .state import State

__all__ = [
    "FabricComponent",
    "Fabric",
    "ForcingTerm",
    "Box",
    "energize",
    "combine",
    "forced_acceleration",
    "euclidean_component",
    "wall_barrier",
    "obstacle_barrier",
    "vortex",
    "attractor_geometry",
]


@dataclass(frozen=True)
class FabricComponent:
    """A desired-behavior geometry with a paired priority energy.

    The geometry supplies the degree-2 acceleration field; the energy's
    tensor weighs the component in the fabric average and defines the level
    set the energized component conserves.
    """

    geometry: GeometryHandle
    energy: FinslerStructure
    label: str


@dataclass(frozen=True)
class ForcingTerm:
    """An objective potential with its gradient and a damping gain."""

    potential: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    damping_gain: float = 0.0

    def __post_init__(self):
        if self.damping_gain < 0.0:
            raise ValueError("damping gain must be nonnegative")


def _energize(c: FabricComponent, s: State, terms: EnergyTerms,
              ) -> tuple[float, np.ndarray]:
    desired = -np.asarray(c.geometry.h2(s), dtype=float)
    xd = s.xdot
    denom = float(xd @ terms.me @ xd)
    alpha = -float(xd @ (terms.me @ desired + terms.fe)) / denom
    return alpha, desired + alpha * xd


def energize(c: FabricComponent, s: State) -> tuple[float, np.ndarray]:
    """Zero-work correction of the component's desired acceleration.

    Adds the unique along-velocity term making the paired energy's rate
    xdot . (Me xddot + fe) vanish, so the energy level is conserved while
    the velocity-orthogonal part of the behavior is untouched. Below the
    velocity floor the desired acceleration is returned unmodified with
    alpha = 0.
    """
    if s.speed() < VELOCITY_FLOOR:
        return 0.0, -np.asarray(c.geometry.h2(s), dtype=float)
    return _energize(c, s, energy_terms(c.energy, s))


@dataclass(frozen=True)
class Fabric:
    """An ordered set of components combined by a metric-weighted average."""

    components: tuple[FabricComponent, ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("a fabric needs at least one component")
        dims = {c.geometry.dim for c in self.components}
        if len(dims) != 1:
            raise ValueError("fabric components must share one dimension")
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def dim(self) -> int:
        return self.components[0].geometry.dim

    def metric(self, s: State) -> np.ndarray:
        """Combined priority metric: the sum of component energy tensors."""
        m, _ = _fabric_terms(self, s)
        return m

    def geometry(self) -> GeometryHandle:
        """The combined fabric as a degree-2 geometry handle."""
        return GeometryHandle(dim=self.dim, h2=lambda s: combine(self, s),
                              label="fabric")

    def total_energy(self, s: State) -> float:
        """Sum of component energies; conserved by the unforced fabric."""
        return sum(c.energy.le(s) for c in self.components)


#: direction used to sample the (degree-0) component metrics at rest, where
#: a velocity-dependent limit would otherwise be ambiguous
_REST_PROBE_SPEED = 1.0


def _fabric_terms(f: Fabric, s: State) -> tuple[np.ndarray, np.ndarray]:
    """Combined metric and metric-weighted energized geometry at a state.

    Components sharing one energy object share one term extraction.
    """
    n = f.dim
    if s.speed() < VELOCITY_FLOOR:
        probe_v = np.zeros(n)
        probe_v[0] = _REST_PROBE_SPEED
        probe = State(s.x, probe_v)
        metric = np.zeros((n, n))
        cache = {}
        for c in f.components:
            key = id(c.energy)
            if key not in cache:
                cache[key] = energy_terms(c.energy, probe).me
            metric = metric + cache[key]
        return metric, np.zeros(n)
    metric = np.zeros((n, n))
    weighted = np.zeros(n)
    cache = {}
    for c in f.components:
        key = id(c.energy)
        terms = cache.get(key)
        if terms is None:
            terms = cache[key] = energy_terms(c.energy, s)
        _, accel = _energize(c, s, terms)
        metric += terms.me
        weighted += terms.me @ (-accel)
    return metric, solve_spd(metric, weighted, context="combined fabric metric")


def combine(f: Fabric, s: State) -> np.ndarray:
    """Metric-weighted average of the energized component geometries.

    Returns (sum_i Mi)^-1 sum_i Mi h2_i with each h2_i already energized;
    degree-2 whenever every component is, since the weights are degree-0.
    """
    _, h2 = _fabric_terms(f, s)
    return h2


def forced_acceleration(f: Fabric, t: ForcingTerm, s: State) -> np.ndarray:
    """Fabric acceleration driven toward the potential's minima.

    xddot = -combine(f, s) - M^-1 (grad psi + B xdot); with B > 0 the total
    energy (potential plus component energies) is dissipated, so
    trajectories settle into the potential's local minima.
    """
    metric, h2 = _fabric_terms(f, s)
    drive = np.asarray(t.gradient(s.x), dtype=float) + t.damping_gain * s.xdot
    return -h2 - solve_spd(metric, drive, context="combined fabric metric")


# ---- component builders -------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Axis-aligned workspace box with strictly positive extent."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box corners must be matching vectors")
        if np.any(hi - lo <= 0.0):
            raise ValueError("box must have positive extent in every dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]


_EUCLIDEAN_ENERGIES: dict[int, FinslerStructure] = {}


def _euclidean_energy(n: int) -> FinslerStructure:
    # one shared instance per dimension so fabrics can dedupe term extraction
    if n not in _EUCLIDEAN_ENERGIES:
        _EUCLIDEAN_ENERGIES[n] = make_finsler(
            ScalarField(n, lambda x, v: norm(v), name="euclidean"))
    return _EUCLIDEAN_ENERGIES[n]


def euclidean_component(dim: int = 2) -> FabricComponent:
    """Straight-line behavior: zero curvature, unit priority everywhere."""
    geom = GeometryHandle(dim=dim, h2=lambda s: np.zeros(dim), label="euclidean")
    return FabricComponent(geometry=geom, energy=_euclidean_energy(dim),
                           label="euclidean")


def wall_barrier(box: Box, lam: float, k: float) -> FabricComponent:
    """Bend trajectories away from the faces of a workspace box.

    h2 = lam ||xdot||^2 grad(sum_faces k / d^2) with d the distance to each
    face; the paired energy weight 1 + sum 1/d^2 raises the component's
    priority near the walls.
    """
    if lam <= 0.0 or k <= 0.0:
        raise ValueError("wall gains must be positive")
    lo, hi = box.lo, box.hi
    n = box.dim

    def h2(s: State) -> np.ndarray:
        sq = float(s.xdot @ s.xdot)
        out = np.zeros(n)
        if sq == 0.0:
            return out
        for i in range(n):
            d_lo = s.x[i] - lo[i]
            d_hi = hi[i] - s.x[i]
            if d_lo <= 0.0 or d_hi <= 0.0:
                raise BarrierDomainError(s.x, min(d_lo, d_hi))
            out[i] = -2.0 * k / d_lo**3 + 2.0 * k / d_hi**3
        return lam * sq * out

    def lg_eval(x, v):
        w = 1.0
        for i in range(n):
            dlo = x[i] - lo[i]
            dhi = hi[i] - x[i]
            w = w + 1.0 / (dlo * dlo) + 1.0 / (dhi * dhi)
        return w * norm(v)

    energy = make_finsler(ScalarField(n, lg_eval, name="wall_weight"))
    geom = GeometryHandle(dim=n, h2=h2, label="wall_barrier")
    return FabricComponent(geometry=geom, energy=energy, label="wall_barrier")


def wall_distance_field(box: Box) -> Callable[[State], float]:
    """Smallest distance to any face of the box."""
    lo, hi = box.lo, box.hi

    def dist(s: State) -> float:
        return float(min(np.min(s.x - lo), np.min(hi - s.x)))

    return dist


def obstacle_barrier(center, radius: float, lam: float, k: float) -> FabricComponent:
    """Circular-obstacle avoidance with priority rising near the obstacle."""
    geom = circle_barrier_geometry(center, radius, lam, k)
    c = np.asarray(center, dtype=float)
    r = float(radius)
    n = c.shape[0]

    def lg_eval(x, v):
        rel = [x[i] - c[i] for i in range(n)]
        phi = (norm(rel) - r) / r
        return (1.0 + 1.0 / (phi * phi)) * norm(v)

    energy = make_finsler(ScalarField(n, lg_eval, name="obstacle_weight"))
    return FabricComponent(geometry=geom, energy=energy, label="obstacle_barrier")


def vortex(seed: int, strength: float, dim: int = 2) -> FabricComponent:
    """Pseudo-random swirl: a quarter-turn of the gradient of a fixed bump
    field, deterministic from the seed."""
    if dim != 2:
        raise ValueError("the vortex component is two-dimensional")
    rng = np.random.default_rng(seed)
    count = 4
    centers = rng.uniform(-3.0, 3.0, size=(count, 2))
    sigmas = rng.uniform(0.8, 1.6, size=count)
    amps = rng.uniform(-1.0, 1.0, size=count)
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])

    def grad_bumps(x: np.ndarray) -> np.ndarray:
        g = np.zeros(2)
        for c, sig, a in zip(centers, sigmas, amps):
            d = x - c
            g += a * math.exp(-float(d @ d) / (2.0 * sig * sig)) * (-d / (sig * sig))
        return g

    def h2(s: State) -> np.ndarray:
        sq = float(s.xdot @ s.xdot)
        if sq == 0.0:
            return np.zeros(2)
        return strength * sq * (rot @ grad_bumps(s.x))

    geom = GeometryHandle(dim=2, h2=h2, label=f"vortex(seed={seed})")
    return FabricComponent(geometry=geom, energy=_euclidean_energy(2), label="vortex")


def attractor_geometry(target, gain: float, softness: float = 0.35) -> FabricComponent:
    """Heuristic funneling toward a target point (no convergence claim).

    h2 = gain ||xdot||^2 grad(soft distance to target); the soft norm keeps
    the field smooth through the target itself.
    """
    t = np.asarray(target, dtype=float)
    if softness <= 0.0:
        raise ValueError("softness must be positive")
    n = t.shape[0]

    def h2(s: State) -> np.ndarray:
        sq = float(s.xdot @ s.xdot)
        if sq == 0.0:
            return np.zeros(n)
        d = s.x - t
        soft = math.sqrt(float(d @ d) + softness * softness)
        return gain * sq * d / soft

    geom = GeometryHandle(dim=n, h2=h2, label="attractor")
    return FabricComponent(geometry=geom, energy=_euclidean_energy(n),
                           label="attractor")


def quadratic_forcing(target, gain: float, damping: float) -> ForcingTerm:
    """psi = gain/2 ||x - target||^2 with linear damping."""
    t = np.asarray(target, dtype=float)

    def potential(x: np.ndarray) -> float:
        d = np.asarray(x, dtype=float) - t
        return 0.5 * gain * float(d @ d)

    def gradient(x: np.ndarray) -> np.ndarray:
        return gain * (np.asarray(x, dtype=float) - t)

    return ForcingTerm(potential=potential, gradient=gradient, damping_gain=damping)
