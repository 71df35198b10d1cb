"""Scenario files: a small indentation-nested key-value grammar (versioned
header ``fabrics-scenario v1``) describing a geometry or fabric, particle
starts, integrator settings, optional forcing, and output options.

Grammar, by example::

    fabrics-scenario v1
    name: demo
    dimension: 2
    seed: 0

    geometry:                 # or a 'fabric:' block, see below
      builder: circle_barrier
      center: 0 0
      radius: 1.0
      lambda: 0.7
      k: 0.5

    particles:
      speeds: 1.5 0.75
      start: -3 -1.25 | 1 0   # position | direction (renormalized on load)

    integrator:
      step: 1e-3
      horizon: 9.0
      scale_horizon_by_speed: true   # run each speed for horizon/speed

    outputs:
      csv: true
      svg: true
      bounds: -4 -2 4 2

A ``fabric:`` block lists components instead of a single builder::

    fabric:
      component:
        type: wall_barrier
        box: -4 -2.5 4 2.5    # lo corner then hi corner
        lambda: 0.15
        k: 0.05
      component:
        type: vortex
        seed: 7
        strength: 0.8

Component types: euclidean, wall_barrier, obstacle_barrier, vortex,
attractor. An optional ``forcing:`` block (target, gain, damping, horizon)
is applied only when running with ``--forced``. Lines starting with '#'
are comments; indentation is two spaces per level.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .fabric import (Box, Fabric, ForcingTerm, attractor_geometry,
                     euclidean_component, obstacle_barrier, quadratic_forcing,
                     vortex, wall_barrier, wall_distance_field)
from .geometry import (GeometryHandle, circle_barrier_geometry,
                       circle_distance_field)
from .state import State

HEADER = "fabrics-scenario v1"

__all__ = ["Scenario", "ScenarioError", "load_scenario", "parse_scenario",
           "bundled_scenario_path"]


class ScenarioError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass
class _Node:
    key: str
    value: str | None
    line: int
    children: list["_Node"] = field(default_factory=list)


def _tokenize(text: str) -> list[tuple[int, str, int]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        indent = len(stripped) - len(stripped.lstrip(" "))
        out.append((indent, stripped.strip(), lineno))
    return out


def _parse_tree(text: str) -> list[_Node]:
    lines = _tokenize(text)
    if not lines:
        raise ScenarioError("empty scenario file")
    indent0, head, lineno0 = lines[0]
    if indent0 != 0 or head != HEADER:
        raise ScenarioError(f"first line must be '{HEADER}'", lineno0)
    root: list[_Node] = []
    stack: list[tuple[int, list[_Node]]] = [(-1, root)]
    for indent, content, lineno in lines[1:]:
        if ":" not in content:
            raise ScenarioError(f"expected 'key: value' or 'key:', got '{content}'",
                                lineno)
        key, _, rest = content.partition(":")
        node = _Node(key.strip(), rest.strip() or None, lineno)
        while stack and indent <= stack[-1][0]:
            stack.pop()
        if not stack:
            raise ScenarioError("inconsistent indentation", lineno)
        stack[-1][1].append(node)
        stack.append((indent, node.children))
    return root


def _all(nodes: list[_Node], key: str) -> list[_Node]:
    return [n for n in nodes if n.key == key]


def _one(nodes: list[_Node], key: str, where: str) -> _Node:
    found = _all(nodes, key)
    if not found:
        raise ScenarioError(f"missing required key '{key}' in {where}")
    if len(found) > 1:
        raise ScenarioError(f"duplicate key '{key}' in {where}", found[1].line)
    return found[0]


def _maybe(nodes: list[_Node], key: str) -> _Node | None:
    found = _all(nodes, key)
    if len(found) > 1:
        raise ScenarioError(f"duplicate key '{key}'", found[1].line)
    return found[0] if found else None


def _floats(node: _Node, count: int | None = None) -> list[float]:
    if node.value is None:
        raise ScenarioError(f"'{node.key}' needs a value", node.line)
    try:
        vals = [float(tok) for tok in node.value.split()]
    except ValueError as exc:
        raise ScenarioError(f"'{node.key}': {exc}", node.line) from None
    if count is not None and len(vals) != count:
        raise ScenarioError(
            f"'{node.key}' needs {count} numbers, got {len(vals)}", node.line)
    return vals


def _float(node: _Node) -> float:
    return _floats(node, 1)[0]


def _int(node: _Node) -> int:
    val = _floats(node, 1)[0]
    if val != round(val):
        raise ScenarioError(f"'{node.key}' must be an integer", node.line)
    return int(val)


def _bool(node: _Node) -> bool:
    if node.value not in ("true", "false"):
        raise ScenarioError(f"'{node.key}' must be true or false", node.line)
    return node.value == "true"


@dataclass
class Scenario:
    """A fully validated, fully built experiment description."""

    name: str
    dim: int
    seed: int
    geometry: GeometryHandle | None
    fabric: Fabric | None
    particles: list[tuple[np.ndarray, np.ndarray]]
    speeds: list[float]
    step: float
    horizon: float
    scale_horizon_by_speed: bool
    forcing: ForcingTerm | None
    forcing_target: np.ndarray | None
    forcing_horizon: float
    emit_csv: bool
    emit_svg: bool
    bounds: tuple[float, float, float, float] | None
    probes: dict[str, Callable[[State], float]]
    energy_probe: Callable[[State], float]
    circles: list[tuple[np.ndarray, float]]
    walls: Box | None

    def accel_field(self, forced: bool) -> Callable[[State], np.ndarray]:
        """The acceleration field a run integrates."""
        if forced:
            if self.forcing is None:
                raise ScenarioError("scenario has no forcing block; cannot run --forced")
            from .fabric import forced_acceleration

            if self.fabric is None:
                raise ScenarioError("forcing requires a fabric scenario")
            fabric, forcing = self.fabric, self.forcing
            return lambda s: forced_acceleration(fabric, forcing, s)
        if self.fabric is not None:
            geom = self.fabric.geometry()
            return lambda s: -geom.h2(s)
        geom = self.geometry
        return lambda s: -geom.h2(s)

    def run_horizon(self, speed: float, forced: bool) -> float:
        if forced:
            return self.forcing_horizon
        if self.scale_horizon_by_speed:
            return self.horizon / speed
        return self.horizon


def _build_geometry(nodes: list[_Node], dim: int):
    builder = _one(nodes, "builder", "geometry block")
    if builder.value == "circle_barrier":
        center = np.array(_floats(_one(nodes, "center", "geometry block"), dim))
        radius = _float(_one(nodes, "radius", "geometry block"))
        lam = _float(_one(nodes, "lambda", "geometry block"))
        k = _float(_one(nodes, "k", "geometry block"))
        geom = circle_barrier_geometry(center, radius, lam, k)
        phi = circle_distance_field(center, radius)
        return geom, [lambda s, phi=phi: phi(s)], [(center, radius)], None
    raise ScenarioError(f"unknown geometry builder '{builder.value}'", builder.line)


def _build_fabric(nodes: list[_Node], dim: int, default_seed: int):
    components = []
    barrier_fields = []
    circles = []
    walls = None
    for comp in _all(nodes, "component"):
        kind = _one(comp.children, "type", "component block")
        t = kind.value
        if t == "euclidean":
            components.append(euclidean_component(dim))
        elif t == "wall_barrier":
            corners = _floats(_one(comp.children, "box", "wall_barrier"), 2 * dim)
            box = Box(np.array(corners[:dim]), np.array(corners[dim:]))
            lam = _float(_one(comp.children, "lambda", "wall_barrier"))
            k = _float(_one(comp.children, "k", "wall_barrier"))
            components.append(wall_barrier(box, lam, k))
            barrier_fields.append(wall_distance_field(box))
            walls = box
        elif t == "obstacle_barrier":
            center = np.array(_floats(_one(comp.children, "center", "obstacle_barrier"), dim))
            radius = _float(_one(comp.children, "radius", "obstacle_barrier"))
            lam = _float(_one(comp.children, "lambda", "obstacle_barrier"))
            k = _float(_one(comp.children, "k", "obstacle_barrier"))
            components.append(obstacle_barrier(center, radius, lam, k))
            phi = circle_distance_field(center, radius)
            barrier_fields.append(lambda s, phi=phi: phi(s))
            circles.append((center, radius))
        elif t == "vortex":
            seed_node = _maybe(comp.children, "seed")
            seed = _int(seed_node) if seed_node is not None else default_seed
            strength = _float(_one(comp.children, "strength", "vortex"))
            components.append(vortex(seed, strength, dim))
        elif t == "attractor":
            target = np.array(_floats(_one(comp.children, "target", "attractor"), dim))
            gain = _float(_one(comp.children, "gain", "attractor"))
            soft_node = _maybe(comp.children, "softness")
            softness = _float(soft_node) if soft_node is not None else 0.35
            components.append(attractor_geometry(target, gain, softness))
        else:
            raise ScenarioError(f"unknown component type '{t}'", kind.line)
    if not components:
        raise ScenarioError("fabric block has no components")
    return Fabric(tuple(components)), barrier_fields, circles, walls


def parse_scenario(text: str, source: str = "<string>",
                   seed_override: int | None = None) -> Scenario:
    tree = _parse_tree(text)

    name = _one(tree, "name", source).value or ""
    dim = _int(_one(tree, "dimension", source))
    if dim < 1:
        raise ScenarioError("dimension must be positive")
    seed_node = _maybe(tree, "seed")
    seed = _int(seed_node) if seed_node is not None else 0
    if seed_override is not None:
        seed = seed_override

    geo_node = _maybe(tree, "geometry")
    fab_node = _maybe(tree, "fabric")
    if (geo_node is None) == (fab_node is None):
        raise ScenarioError("scenario needs exactly one of 'geometry:' or 'fabric:'")
    geometry = fabric = None
    walls = None
    if geo_node is not None:
        geometry, barrier_fields, circles, walls = _build_geometry(geo_node.children, dim)
    else:
        fabric, barrier_fields, circles, walls = _build_fabric(fab_node.children, dim, seed)

    particles_node = _one(tree, "particles", source)
    speeds = _floats(_one(particles_node.children, "speeds", "particles block"))
    if not speeds or any(v <= 0.0 for v in speeds):
        raise ScenarioError("speeds must be positive",
                            _one(particles_node.children, "speeds", "particles").line)
    particles = []
    for start in _all(particles_node.children, "start"):
        if start.value is None or "|" not in start.value:
            raise ScenarioError("start needs 'position | direction'", start.line)
        pos_part, _, dir_part = start.value.partition("|")
        try:
            pos = np.array([float(t) for t in pos_part.split()])
            direction = np.array([float(t) for t in dir_part.split()])
        except ValueError as exc:
            raise ScenarioError(f"start: {exc}", start.line) from None
        if pos.shape != (dim,) or direction.shape != (dim,):
            raise ScenarioError(f"start needs {dim}+{dim} numbers", start.line)
        dnorm = float(np.linalg.norm(direction))
        if dnorm == 0.0:
            raise ScenarioError("start direction must be nonzero", start.line)
        if abs(dnorm - 1.0) > 1e-6:
            print(f"warning: {source}:{start.line}: direction renormalized "
                  f"(|d| = {dnorm:.8g})", file=sys.stderr)
        particles.append((pos, direction / dnorm))
    if not particles:
        raise ScenarioError("particles block lists no starts", particles_node.line)

    integ = _one(tree, "integrator", source)
    step = _float(_one(integ.children, "step", "integrator block"))
    horizon = _float(_one(integ.children, "horizon", "integrator block"))
    scale_node = _maybe(integ.children, "scale_horizon_by_speed")
    scale = _bool(scale_node) if scale_node is not None else False
    if step <= 0.0 or horizon <= 0.0:
        raise ScenarioError("step and horizon must be positive", integ.line)

    forcing = None
    forcing_target = None
    forcing_horizon = 30.0
    forc_node = _maybe(tree, "forcing")
    if forc_node is not None:
        forcing_target = np.array(_floats(_one(forc_node.children, "target", "forcing"), dim))
        gain = _float(_one(forc_node.children, "gain", "forcing"))
        damping = _float(_one(forc_node.children, "damping", "forcing"))
        hor_node = _maybe(forc_node.children, "horizon")
        if hor_node is not None:
            forcing_horizon = _float(hor_node)
        forcing = quadratic_forcing(forcing_target, gain, damping)

    emit_csv = emit_svg = True
    bounds = None
    out_node = _maybe(tree, "outputs")
    if out_node is not None:
        csv_node = _maybe(out_node.children, "csv")
        svg_node = _maybe(out_node.children, "svg")
        bounds_node = _maybe(out_node.children, "bounds")
        if csv_node is not None:
            emit_csv = _bool(csv_node)
        if svg_node is not None:
            emit_svg = _bool(svg_node)
        if bounds_node is not None:
            bounds = tuple(_floats(bounds_node, 4))

    if len(barrier_fields) == 1:
        min_phi = barrier_fields[0]
    elif barrier_fields:
        def min_phi(s: State, fields=tuple(barrier_fields)) -> float:
            return min(f(s) for f in fields)
    else:
        def min_phi(s: State) -> float:
            return math.inf

    if fabric is not None:
        energy_probe = fabric.total_energy
    else:
        def energy_probe(s: State) -> float:
            return 0.5 * float(s.xdot @ s.xdot)

    return Scenario(
        name=name, dim=dim, seed=seed, geometry=geometry, fabric=fabric,
        particles=particles, speeds=list(speeds), step=step, horizon=horizon,
        scale_horizon_by_speed=scale, forcing=forcing,
        forcing_target=forcing_target, forcing_horizon=forcing_horizon,
        emit_csv=emit_csv, emit_svg=emit_svg, bounds=bounds,
        probes={"energy": energy_probe, "min_phi": min_phi},
        energy_probe=energy_probe, circles=circles, walls=walls,
    )


def bundled_scenario_path(name: str) -> Path:
    return Path(str(resources.files("fabrics") / "scenarios" / name))


def load_scenario(path, seed_override: int | None = None) -> Scenario:
    """Load a scenario file; bare names fall back to the bundled set."""
    p = Path(path)
    if not p.exists():
        candidate = bundled_scenario_path(p.name if p.suffix else f"{p.name}.scenario")
        if candidate.exists():
            p = candidate
        else:
            raise ScenarioError(f"scenario file not found: {path}")
    return parse_scenario(p.read_text(), source=str(p), seed_override=seed_override)
