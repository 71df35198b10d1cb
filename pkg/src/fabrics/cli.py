"""Scenario runner and property-suite driver.

Exit codes: 0 ok, 1 validation error, 2 property violation, 3 integration
abort.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import path_distance
from .integrate import IntegrationAborted, IntegratorConfig, Trajectory, integrate
from .scenario import Scenario, ScenarioError, load_scenario
from .state import State
from .suites import SUITE_NAMES, run_suite

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_VIOLATION = 2
EXIT_ABORT = 3


@dataclass
class RunRecord:
    particle: int
    speed: float
    trajectory: Trajectory
    aborted: bool
    abort_message: str = ""
    csv_path: Path | None = None


def write_csv(path: Path, traj: Trajectory) -> None:
    """Lossless trajectory record: 17 significant digits per value."""
    n = traj.dim
    cols = (["t"] + [f"x{i}" for i in range(n)] + [f"v{i}" for i in range(n)]
            + ["energy", "min_phi"])
    m = len(traj)
    energy = traj.diagnostics.get("energy", np.full(m, np.nan))
    min_phi = traj.diagnostics.get("min_phi", np.full(m, np.inf))
    table = np.column_stack([traj.times, traj.positions(), traj.velocities(),
                             energy, min_phi])
    with path.open("w") as fh:
        np.savetxt(fh, table, fmt="%.17g", delimiter=",",
                   header=",".join(cols), comments="")


def write_svg(path: Path, scenario: Scenario, records: list[RunRecord]) -> None:
    """Overlay plot of every trajectory; opacity fades with higher speed."""
    if scenario.bounds is not None:
        xmin, ymin, xmax, ymax = scenario.bounds
    else:
        pts = np.vstack([r.trajectory.positions() for r in records])
        xmin, ymin = pts.min(axis=0)[:2]
        xmax, ymax = pts.max(axis=0)[:2]
        pad = 0.05 * max(xmax - xmin, ymax - ymin, 1e-9)
        xmin, ymin, xmax, ymax = xmin - pad, ymin - pad, xmax + pad, ymax + pad
    width = 800.0
    height = width * (ymax - ymin) / (xmax - xmin)
    sx = width / (xmax - xmin)
    sy = height / (ymax - ymin)

    def to_px(p):
        return (p[0] - xmin) * sx, (ymax - p[1]) * sy

    speeds = sorted({r.speed for r in records})
    opacity = {v: (0.9 if len(speeds) == 1
                   else 0.9 - 0.45 * speeds.index(v) / (len(speeds) - 1))
               for v in speeds}
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2", "#393b79"]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width:.1f} {height:.1f}">',
        f'<rect width="{width:.1f}" height="{height:.1f}" fill="white"/>',
    ]
    if scenario.walls is not None:
        x0, y0 = to_px((scenario.walls.lo[0], scenario.walls.hi[1]))
        x1, y1 = to_px((scenario.walls.hi[0], scenario.walls.lo[1]))
        parts.append(f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" '
                     f'height="{y1 - y0:.2f}" fill="none" stroke="#555" '
                     'stroke-width="1.5"/>')
    for center, radius in scenario.circles:
        cx, cy = to_px(center)
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{radius * sx:.2f}" '
                     'fill="#ddd" stroke="#555" stroke-width="1.5"/>')
    if scenario.forcing_target is not None:
        tx, ty = to_px(scenario.forcing_target)
        parts.append(f'<circle cx="{tx:.2f}" cy="{ty:.2f}" r="4" fill="#111"/>')
    for r in records:
        pts = r.trajectory.positions()
        coords = " ".join(f"{x:.6g},{y:.6g}"
                          for x, y in (to_px(p) for p in pts))
        color = palette[r.particle % len(palette)]
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                     f'stroke-width="1.2" opacity="{opacity[r.speed]:.2f}"/>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def run_scenario(scenario: Scenario, forced: bool, out_dir: Path,
                 ) -> tuple[list[RunRecord], int]:
    accel = scenario.accel_field(forced)
    records = []
    status = EXIT_OK
    for pi, (pos, direction) in enumerate(scenario.particles):
        for speed in scenario.speeds:
            s0 = State(pos, speed * direction)
            cfg = IntegratorConfig(step=scenario.step,
                                   horizon=scenario.run_horizon(speed, forced))
            try:
                traj = integrate(accel, s0, cfg, probes=scenario.probes)
                rec = RunRecord(pi, speed, traj, aborted=False)
            except IntegrationAborted as exc:
                rec = RunRecord(pi, speed, exc.partial, aborted=True,
                                abort_message=str(exc))
                status = EXIT_ABORT
            records.append(rec)
    out_dir.mkdir(parents=True, exist_ok=True)
    if scenario.emit_csv:
        for rec in records:
            fname = f"{scenario.name}_p{rec.particle:02d}_s{rec.speed:g}.csv"
            rec.csv_path = out_dir / fname
            write_csv(rec.csv_path, rec.trajectory)
    if scenario.emit_svg:
        complete = [r for r in records if len(r.trajectory) >= 2]
        if complete:
            write_svg(out_dir / f"{scenario.name}.svg", scenario, complete)
    return records, status


def summarize(scenario: Scenario, records: list[RunRecord]) -> list[str]:
    lines = []
    header = (f"{'run':<10} {'speed':>6} {'stop':<22} {'final position':<28} "
              f"{'energy drift':>13} {'min_phi':>10}")
    lines.append(header)
    for rec in records:
        traj = rec.trajectory
        final = traj.final_state()
        energy = traj.diagnostics.get("energy")
        drift = "-"
        if energy is not None and len(energy) and abs(energy[0]) > 1e-12:
            drift = f"{float(np.max(np.abs(energy - energy[0])) / abs(energy[0])):.3e}"
        phi = traj.diagnostics.get("min_phi")
        phi_min = f"{float(np.min(phi)):.4f}" if phi is not None and len(phi) else "-"
        stop = "ABORTED" if rec.aborted else (traj.stop_reason or "?")
        pos_txt = "(" + ", ".join(f"{v:.4f}" for v in final.x) + ")"
        lines.append(f"p{rec.particle:02d}{'':<7} {rec.speed:>6g} {stop:<22} "
                     f"{pos_txt:<28} {drift:>13} {phi_min:>10}")
    by_particle: dict[int, list[RunRecord]] = {}
    for rec in records:
        if not rec.aborted:
            by_particle.setdefault(rec.particle, []).append(rec)
    worst = 0.0
    pair_lines = []
    for pi, recs in sorted(by_particle.items()):
        for i in range(len(recs)):
            for j in range(i + 1, len(recs)):
                try:
                    d = path_distance(recs[i].trajectory, recs[j].trajectory)
                except ValueError:
                    continue
                worst = max(worst, d)
                pair_lines.append(
                    f"p{pi:02d} path_distance(speed {recs[i].speed:g} vs "
                    f"{recs[j].speed:g}) = {d:.3e}")
    if pair_lines:
        lines.append("")
        lines.extend(pair_lines)
        lines.append(f"max cross-speed path distance: {worst:.3e}")
    return lines


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario, seed_override=args.seed)
        if args.forced and scenario.forcing is None:
            raise ScenarioError("scenario has no forcing block; cannot run --forced")
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    records, status = run_scenario(scenario, args.forced, Path(args.out))
    for line in summarize(scenario, records):
        print(line)
    for rec in records:
        if rec.aborted:
            print(f"abort: p{rec.particle:02d} speed {rec.speed:g}: "
                  f"{rec.abort_message}", file=sys.stderr)
    return status


def cmd_check(args) -> int:
    try:
        result = run_suite(args.suite, seed=args.seed, inject=args.inject)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"suite {result.name}: {'PASS' if result.passed else 'FAIL'}")
    for line in result.lines:
        print(line)
    return EXIT_OK if result.passed else EXIT_VIOLATION


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fabrics",
        description="Run geometry/fabric scenarios and property suites.")
    parser.add_argument("--version", action="version",
                        version=f"fabrics {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a scenario and emit CSV/SVG")
    p_run.add_argument("scenario", help="scenario file path or bundled name")
    p_run.add_argument("--forced", action="store_true",
                       help="apply the scenario's forcing block")
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="run a property suite")
    p_check.add_argument("suite", help=f"one of: {', '.join(SUITE_NAMES)}")
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--inject", default=None,
                         help="sensitivity hook: inject a known violation "
                              "(homogeneity suite: 'hd1-impostor')")
    p_check.set_defaults(func=cmd_check)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
