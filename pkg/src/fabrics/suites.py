"""Property suites driven by the CLI ``check`` command and the acceptance
tests. Each suite runs with a fixed seed and reports worst-case magnitudes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import zoo
from .autodiff import evaluate_jet, finite_difference_jet
from .fabric import Fabric, energize
from .finsler import (DualRouteMismatch, energy_terms, geodesic_geometry,
                      geometric_terms, verify_theorem2)
from .geometry import (GeometryHandle, check_homogeneity,
                       circle_barrier_geometry, generating_acceleration,
                       homogeneity_violation, project_perp, reparameterize)
from .integrate import IntegratorConfig, energy_drift, integrate, integrate_explicit
from .linalg import solve_spd
from .riemann import closed_form_mg, fictitious_force, riemannian_structure
from .state import State

SUITE_NAMES = ("homogeneity", "lemma1", "theorem1", "theorem2",
               "riemann-oracle", "energy", "fabric", "autodiff")


@dataclass
class SuiteResult:
    name: str
    passed: bool = True
    lines: list[str] = field(default_factory=list)

    def check(self, label: str, value: float, bound: float, larger_ok: bool = False):
        """Record one worst-case magnitude against its bound."""
        ok = value >= bound if larger_ok else value <= bound
        rel = ">=" if larger_ok else "<="
        verdict = "ok" if ok else "FAIL"
        self.lines.append(f"  {label}: {value:.3e} {rel} {bound:.1e} [{verdict}]")
        if not ok:
            self.passed = False

    def note(self, text: str):
        self.lines.append(f"  {text}")


def fd_accelerations(traj) -> tuple[np.ndarray, np.ndarray]:
    """Accelerations at interior samples by nonuniform central differences
    of the sampled velocities. Independent of any acceleration field."""
    t = traj.times
    v = traj.velocities()
    h1 = (t[1:-1] - t[:-2])[:, None]
    h2 = (t[2:] - t[1:-1])[:, None]
    acc = (h1 * h1 * v[2:] - (h1 * h1 - h2 * h2) * v[1:-1] - h2 * h2 * v[:-2]) \
        / (h1 * h2 * (h1 + h2))
    return np.arange(1, len(t) - 1), acc


# ---- homogeneity -------------------------------------------------------------


def _fabric_for_checks(seed: int) -> Fabric:
    from .scenario import bundled_scenario_path, load_scenario

    sc = load_scenario(bundled_scenario_path("fig3.scenario"))
    return sc.fabric


def suite_homogeneity(seed: int = 0, inject: str | None = None) -> SuiteResult:
    """Degree gradings of every structure-derived quantity and every
    geometry built by this library."""
    res = SuiteResult("homogeneity")
    rng = np.random.default_rng(seed)
    samples = zoo.random_states(2, 25, rng)

    for f in zoo.finsler_structures():
        name = f.lg.name
        gradings = [
            (f"lg[{name}] degree 1", lambda s, f=f: f.lg(s), 1),
            (f"le[{name}] degree 2", lambda s, f=f: f.le(s), 2),
            (f"me[{name}] degree 0", lambda s, f=f: energy_terms(f, s).me, 0),
            (f"fe[{name}] degree 2", lambda s, f=f: energy_terms(f, s).fe, 2),
            (f"pe[{name}] degree 1", lambda s, f=f: energy_terms(f, s).pe, 1),
        ]
        for label, fn, deg in gradings:
            rep = homogeneity_violation(fn, samples, deg)
            res.check(label, rep.max_violation, 1e-10)
        rep = check_homogeneity(geodesic_geometry(f), samples, 2)
        res.check(f"geodesic h2[{name}] degree 2", rep.max_violation, 1e-10)

    barrier = circle_barrier_geometry((0.0, 0.0), 1.0, 0.7, 0.5)
    outside = [State(s.x + np.array([3.0, 0.0]), s.xdot) for s in samples]
    rep = check_homogeneity(barrier, outside, 2)
    res.check("circle barrier degree 2", rep.max_violation, 1e-12)

    fabric = _fabric_for_checks(seed)
    inside = zoo.random_states(2, 10, rng, x_scale=0.9)
    shifted = [State(s.x + np.array([-2.0, 0.0]), s.xdot) for s in inside]
    for c in fabric.components:
        rep = check_homogeneity(c.geometry, shifted, 2)
        res.check(f"component {c.label} degree 2", rep.max_violation, 1e-12)
    rep = check_homogeneity(fabric.geometry(), shifted, 2)
    res.check("combined fabric degree 2", rep.max_violation, 1e-10)

    if inject == "hd1-impostor":
        impostor = GeometryHandle(dim=2, h2=lambda s: s.xdot.copy(), label="impostor")
        rep = check_homogeneity(impostor, samples, 2)
        res.check("injected degree-1 impostor checked as degree 2",
                  rep.max_violation, 1e-10)
    return res


# ---- momentum/energy identities ----------------------------------------------


def suite_lemma1(seed: int = 0, states_per_structure: int = 500) -> SuiteResult:
    res = SuiteResult("lemma1")
    rng = np.random.default_rng(seed)
    for f in zoo.finsler_structures():
        samples = zoo.random_states(2, states_per_structure, rng)
        worst_mom = 0.0
        worst_energy = 0.0
        for s in samples:
            t = energy_terms(f, s)
            scale = 1.0 + float(np.linalg.norm(t.pe))
            worst_mom = max(worst_mom,
                            float(np.linalg.norm(t.pe - t.me @ s.xdot)) / scale)
            e1 = 0.5 * float(t.pe @ s.xdot)
            e2 = 0.5 * float(s.xdot @ t.me @ s.xdot)
            e3 = 0.5 * float(t.pe @ np.linalg.solve(t.me, t.pe))
            ref = max(abs(t.le), 1e-12)
            for other in (e1, e2, e3):
                worst_energy = max(worst_energy, abs(other - t.le) / ref)
        res.check(f"momentum identity [{f.lg.name}]", worst_mom, 1e-10)
        res.check(f"energy identities [{f.lg.name}]", worst_energy, 1e-10)
    return res


# ---- retiming round trip -------------------------------------------------------


def suite_theorem1(seed: int = 0, pairs: int = 20, step: float = 2.5e-4,
                   horizon: float = 1.5) -> SuiteResult:
    """Round-trip retiming of generating and explicit-form solutions.

    Residuals use finite-differenced accelerations of the produced samples,
    so they genuinely tie the retimed data to the claimed equations.
    """
    res = SuiteResult("theorem1")
    rng = np.random.default_rng(seed)
    cfg = IntegratorConfig(step=step, horizon=horizon)
    worst_explicit = 0.0
    worst_generating = 0.0
    for _ in range(pairs):
        g = zoo.random_hd2_geometry(2, rng)
        profile = zoo.random_alpha_profile(rng)
        x0 = rng.uniform(-1.0, 1.0, size=2)
        v0 = rng.uniform(-1.0, 1.0, size=2)
        v0 = v0 / np.linalg.norm(v0)
        s0 = State(x0, v0)

        # direction 1: retimed generating solution solves the explicit form
        # with along-velocity coefficient t''(s) / t'(s)^2
        gen = integrate(lambda s: generating_acceleration(g, s), s0, cfg)
        retimed = reparameterize(gen, profile)
        idx, acc = fd_accelerations(retimed)
        u = retimed.diagnostics["dtds"]
        udot = retimed.diagnostics["d2tds2"]
        alpha_out = udot / (u * u)
        for k, a in zip(idx, acc):
            s = retimed.states[k]
            r = a + g.h2(s) + alpha_out[k] * s.xdot
            worst_explicit = max(worst_explicit, float(np.max(np.abs(r))))

        # direction 2: retiming an explicit-form solution through the clock
        # ODE with the same profile recovers a generating solution
        expl = integrate_explicit(g, profile, s0, cfg)
        recovered = reparameterize(expl, profile)
        idx, acc = fd_accelerations(recovered)
        for k, a in zip(idx, acc):
            s = recovered.states[k]
            r = a + g.h2(s)
            worst_generating = max(worst_generating, float(np.max(np.abs(r))))
    res.check("explicit-form residual (direction 1)", worst_explicit, 1e-6)
    res.check("generating residual (direction 2)", worst_generating, 1e-6)
    return res


# ---- structure equations of motion ---------------------------------------------


def suite_theorem2(seed: int = 0, states_per_structure: int = 20) -> SuiteResult:
    res = SuiteResult("theorem2")
    rng = np.random.default_rng(seed)
    worst_mass_route = 0.0
    worst_force_route = 0.0
    worst_null = 0.0
    worst_force_orth = 0.0
    worst_identity = 0.0
    worst_residual = 0.0
    probe_min = math.inf
    try:
        for f in zoo.finsler_structures():
            samples = zoo.random_states(2, states_per_structure, rng,
                                        min_speed=0.5)
            for s in samples:
                gt = geometric_terms(f, s, tol=1e-8)
                et = energy_terms(f, s)

                # recompute the closed forms here so the suite's dual-route
                # comparison does not just trust geometric_terms
                lg_val = math.sqrt(2.0 * et.le)
                me_inv = np.linalg.inv(et.me)
                rxd = et.me - np.outer(et.pe, et.pe) / float(et.pe @ me_inv @ et.pe)
                rpe = me_inv - np.outer(s.xdot, s.xdot) / float(s.xdot @ et.me @ s.xdot)
                worst_mass_route = max(
                    worst_mass_route,
                    float(np.linalg.norm(gt.mg - rxd / lg_val)
                          / (1.0 + np.linalg.norm(rxd) / lg_val)))
                worst_force_route = max(
                    worst_force_route,
                    float(np.linalg.norm(gt.fg - et.me @ (rpe @ et.fe) / lg_val)
                          / (1.0 + np.linalg.norm(gt.fg))))

                mg_scale = 1.0 + float(np.linalg.norm(gt.mg))
                worst_null = max(worst_null,
                                 float(np.linalg.norm(gt.mg @ s.xdot)) / mg_scale)
                fg_scale = 1.0 + float(np.linalg.norm(gt.fg)) * s.speed()
                worst_force_orth = max(worst_force_orth,
                                       abs(float(gt.fg @ s.xdot)) / fg_scale)
                ident = float(np.linalg.norm(et.me @ gt.rpe @ et.me - gt.rxd)
                              / (1.0 + np.linalg.norm(gt.rxd)))
                worst_identity = max(worst_identity, ident)
                rep = verify_theorem2(f, s, trials=5, seed=int(rng.integers(1 << 31)))
                worst_residual = max(worst_residual, rep.max_residual)

                # violation probe: an orthogonal perturbation of the solved
                # acceleration must be loudly visible
                base = solve_spd(et.me, et.fe)
                delta = project_perp(s.xdot, rng.standard_normal(2))
                delta = delta / np.linalg.norm(delta) * 1e-3
                perturbed = -base + delta
                r = float(np.linalg.norm(gt.mg @ perturbed + gt.fg)) \
                    / (1.0 + float(np.linalg.norm(gt.fg)))
                probe_min = min(probe_min, r)
    except DualRouteMismatch as exc:
        res.passed = False
        res.note(f"dual route mismatch: {exc}")
        return res
    res.check("geometric mass dual route", worst_mass_route, 1e-8)
    res.check("geometric force dual route", worst_force_route, 1e-8)
    res.check("mg @ xdot null space", worst_null, 1e-8)
    res.check("fg . xdot orthogonality", worst_force_orth, 1e-8)
    res.check("me rpe me = rxd identity", worst_identity, 1e-8)
    res.check("explicit-family residual", worst_residual, 1e-8)
    res.check("violation probe residual", probe_min, 1e-4, larger_ok=True)
    return res


# ---- closed-form oracle ---------------------------------------------------------


def suite_riemann_oracle(seed: int = 0, metrics: int = 20,
                         states_per_metric: int = 100) -> SuiteResult:
    res = SuiteResult("riemann-oracle")
    rng = np.random.default_rng(seed)
    worst_me = 0.0
    worst_fe = 0.0
    worst_mg = 0.0
    for _ in range(metrics):
        m = zoo.random_polynomial_metric(2, rng)
        f = riemannian_structure(m)
        samples = zoo.random_states(2, states_per_metric, rng)
        for s in samples:
            et = energy_terms(f, s)
            G = m.matrix(s.x)
            worst_me = max(worst_me, float(np.linalg.norm(et.me - G)
                                           / (1.0 + np.linalg.norm(G))))
            ff = fictitious_force(m, s)
            worst_fe = max(worst_fe, float(np.linalg.norm(et.fe - ff)
                                           / (1.0 + np.linalg.norm(ff))))
        for s in samples[:10]:
            gt = geometric_terms(f, s)
            ref = closed_form_mg(m, s)
            worst_mg = max(worst_mg, float(np.linalg.norm(gt.mg - ref)
                                           / (1.0 + np.linalg.norm(ref))))
    res.check("energy tensor vs metric", worst_me, 1e-8)
    res.check("force vs fictitious force", worst_fe, 1e-8)
    res.check("geometric mass vs closed form", worst_mg, 1e-8)
    return res


# ---- geodesic energy conservation -----------------------------------------------


def suite_energy(seed: int = 0, horizon: float = 10.0, step: float = 1e-3,
                 ) -> SuiteResult:
    """Geodesic runs must conserve the structure energy, with drift falling
    at fourth order under step halving (runs with drift at rounding level
    pass the ratio check by exactness)."""
    res = SuiteResult("energy")
    for f in zoo.finsler_structures():
        s0 = zoo.geodesic_start(f.lg.name)
        geom = geodesic_geometry(f)

        def accel(s, geom=geom):
            return -geom.h2(s)

        drift_h = energy_drift(
            integrate(accel, s0, IntegratorConfig(step=step, horizon=horizon)), f.le)
        res.check(f"drift [{f.lg.name}] h={step:g}", drift_h, 1e-6)
        drift_half = energy_drift(
            integrate(accel, s0, IntegratorConfig(step=step / 2, horizon=horizon)),
            f.le)
        if drift_h <= 1e-12:
            res.note(f"drift [{f.lg.name}] at rounding level; ratio check skipped")
        else:
            ratio = drift_h / max(drift_half, 1e-300)
            res.check(f"halving ratio [{f.lg.name}]", ratio, 8.0, larger_ok=True)
    return res


# ---- fabric behavior --------------------------------------------------------------


def suite_fabric(seed: int = 0) -> SuiteResult:
    """Zero-work energization, cross-speed path consistency of the layered
    fabric, and forced convergence with intact barriers."""
    from .geometry import path_distance
    from .scenario import bundled_scenario_path, load_scenario

    res = SuiteResult("fabric")
    sc = load_scenario(bundled_scenario_path("fig3.scenario"))
    fabric = sc.fabric
    probes = dict(sc.probes)

    # per-component zero-work drift
    ez_horizon = 10.0
    s0 = State(np.array([-2.6, -0.4]), np.array([0.9, 0.35]))
    for c in fabric.components:
        def accel(s, c=c):
            return energize(c, s)[1]

        traj = integrate(accel, s0, IntegratorConfig(step=1e-3, horizon=ez_horizon))
        drift = energy_drift(traj, c.energy.le)
        res.check(f"energization drift [{c.label}]", drift, 1e-6)

    # cross-speed path consistency of the combined fabric
    geom = fabric.geometry()

    def fabric_accel(s):
        return -geom.h2(s)

    consistency_starts = sc.particles[:3]
    worst_pd = 0.0
    base_h = sc.step
    for pos, direction in consistency_starts:
        runs = []
        for speed in (0.75, 1.5):
            cfg = IntegratorConfig(step=base_h, horizon=sc.horizon / speed)
            runs.append(integrate(fabric_accel, State(pos, speed * direction), cfg))
        worst_pd = max(worst_pd, path_distance(runs[0], runs[1]))
    res.check("cross-speed path distance", worst_pd, 5e-3)

    # forced convergence into the target ball with barriers intact
    from .fabric import forced_acceleration

    forcing = sc.forcing
    target = sc.forcing_target
    horizon = sc.forcing_horizon
    worst_final = 0.0
    worst_margin = math.inf
    for pos, direction in sc.particles:
        s0 = State(pos, sc.speeds[0] * direction)
        cfg = IntegratorConfig(step=sc.step, horizon=horizon)
        traj = integrate(lambda s: forced_acceleration(fabric, forcing, s),
                         s0, cfg, probes=probes)
        final = traj.final_state()
        worst_final = max(worst_final, float(np.linalg.norm(final.x - target)))
        worst_margin = min(worst_margin, float(np.min(traj.diagnostics["min_phi"])))
    res.check("forced final distance to target", worst_final, 1e-2)
    res.check("barrier margin along forced runs", worst_margin, 0.0, larger_ok=True)
    return res


# ---- derivative engine vs finite differences ---------------------------------------


def suite_autodiff(seed: int = 0, states_per_field: int = 200) -> SuiteResult:
    res = SuiteResult("autodiff")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for f in zoo.scalar_fields():
        samples = zoo.random_states(f.arity, states_per_field, rng,
                                    x_scale=1.0, v_scale=1.0, min_speed=0.0)
        for s in samples:
            exact = evaluate_jet(f, s)
            approx = finite_difference_jet(f, s, step=1e-5)
            dev = max(
                abs(exact.value - approx.value),
                float(np.max(np.abs(exact.gradient - approx.gradient))),
                float(np.max(np.abs(exact.hessian - approx.hessian))),
            )
            worst = max(worst, dev)
    res.check("jet vs finite differences", worst, 1e-5)
    return res


_SUITES = {
    "homogeneity": suite_homogeneity,
    "lemma1": suite_lemma1,
    "theorem1": suite_theorem1,
    "theorem2": suite_theorem2,
    "riemann-oracle": suite_riemann_oracle,
    "energy": suite_energy,
    "fabric": suite_fabric,
    "autodiff": suite_autodiff,
}


def run_suite(name: str, seed: int = 0, inject: str | None = None) -> SuiteResult:
    if name not in _SUITES:
        raise KeyError(f"unknown suite '{name}'; choose from {', '.join(_SUITES)}")
    if name == "homogeneity":
        return suite_homogeneity(seed=seed, inject=inject)
    if inject:
        raise KeyError(f"suite '{name}' has no injection hook")
    return _SUITES[name](seed=seed)
