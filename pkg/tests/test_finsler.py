"""Finsler structures: construction, axioms, energy/momentum identities,
the geodesic generator, and the dual-route geometric terms."""

import numpy as np
import pytest

from fabrics.autodiff import ScalarField, dot, norm, tanh
from fabrics.finsler import (VELOCITY_FLOOR, energy_terms, geodesic_geometry,
                             geometric_terms, make_finsler, validate_finsler,
                             verify_theorem2)
from fabrics.geometry import check_homogeneity, project_perp
from fabrics.linalg import SingularMassError, solve_spd
from fabrics.state import State
from fabrics.zoo import (euclidean_structure, finsler_structures,
                         diagonal_polynomial_metric, random_states)
from fabrics.riemann import MetricField, riemannian_structure


def test_make_finsler_squares_the_structure():
    f = euclidean_structure()
    s = State([0.1, 0.2], [3.0, 4.0])
    assert f.lg(s) == pytest.approx(5.0)
    assert f.le(s) == pytest.approx(12.5)


def test_make_finsler_tanh_weighted():
    lg = ScalarField(2, lambda x, v: norm(v) * (1.0 + 0.5 * tanh(x[0])))
    f = make_finsler(lg)
    rng = np.random.default_rng(0)
    for s in random_states(2, 20, rng):
        assert f.le(s) == pytest.approx(0.5 * f.lg(s) ** 2, rel=1e-14)


def test_riemannian_energy_is_quadratic_form():
    m = diagonal_polynomial_metric()
    f = riemannian_structure(m)
    rng = np.random.default_rng(1)
    for s in random_states(2, 10, rng):
        G = m.matrix(s.x)
        assert f.le(s) == pytest.approx(0.5 * float(s.xdot @ G @ s.xdot),
                                        rel=1e-13)


def test_validate_passes_structure_zoo():
    rng = np.random.default_rng(2)
    samples = random_states(2, 40, rng)
    for f in finsler_structures():
        report = validate_finsler(f, samples)
        assert report.ok(), (f.lg.name, report)


def test_validate_flags_sign_violation():
    lg = ScalarField(2, lambda x, v: v[0])
    f = make_finsler(lg)
    report = validate_finsler(f, [State([0.0, 0.0], [-1.0, 0.0])])
    assert report.positivity >= 1.0
    assert not report.ok()


def test_validate_flags_wrong_degree():
    lg = ScalarField(2, lambda x, v: dot(v, v))  # degree 2, not 1
    f = make_finsler(lg)
    rng = np.random.default_rng(3)
    report = validate_finsler(f, random_states(2, 10, rng))
    assert report.homogeneity > 0.2
    assert not report.ok()


def test_energy_terms_euclidean():
    f = euclidean_structure()
    s = State([0.4, -0.2], [0.6, 0.8])
    t = energy_terms(f, s)
    np.testing.assert_allclose(t.me, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(t.fe, 0.0, atol=1e-12)
    np.testing.assert_allclose(t.pe, s.xdot, atol=1e-12)
    assert t.le == pytest.approx(0.5)


def test_energy_terms_match_worked_example():
    m = MetricField(2, lambda x: [[1.0 + x[0] * x[0], 0.0], [0.0, 1.0]], "diag")
    f = riemannian_structure(m)
    t = energy_terms(f, State([1.0, 0.0], [1.0, 1.0]))
    np.testing.assert_allclose(t.me, np.diag([2.0, 1.0]), atol=1e-12)
    np.testing.assert_allclose(t.fe, [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(t.pe, [2.0, 1.0], atol=1e-12)
    assert t.le == pytest.approx(1.5)


def test_energy_terms_rejects_rest_state():
    f = euclidean_structure()
    with pytest.raises(ValueError):
        energy_terms(f, State([0.0, 0.0], [0.0, VELOCITY_FLOOR / 10]))


def test_momentum_and_energy_identities():
    rng = np.random.default_rng(4)
    for f in finsler_structures():
        for s in random_states(2, 50, rng):
            t = energy_terms(f, s)
            np.testing.assert_allclose(t.pe, t.me @ s.xdot,
                                       atol=1e-10 * (1 + np.linalg.norm(t.pe)))
            ref = max(abs(t.le), 1e-12)
            assert 0.5 * float(t.pe @ s.xdot) == pytest.approx(t.le, abs=1e-10 * ref)
            assert 0.5 * float(s.xdot @ t.me @ s.xdot) == pytest.approx(
                t.le, abs=1e-10 * ref)
            assert 0.5 * float(t.pe @ np.linalg.solve(t.me, t.pe)) == pytest.approx(
                t.le, abs=1e-10 * ref)


def test_geodesic_geometry_euclidean_is_flat():
    g = geodesic_geometry(euclidean_structure())
    rng = np.random.default_rng(5)
    for s in random_states(2, 10, rng):
        np.testing.assert_allclose(g.h2(s), 0.0, atol=1e-12)


def test_geodesic_geometry_matches_energy_solve():
    f = riemannian_structure(diagonal_polynomial_metric())
    g = geodesic_geometry(f)
    s = State([1.0, 0.0], [1.0, 1.0])
    t = energy_terms(f, s)
    np.testing.assert_allclose(g.h2(s), np.linalg.solve(t.me, t.fe), atol=1e-12)


def test_geodesic_geometry_is_degree_two():
    rng = np.random.default_rng(6)
    samples = random_states(2, 15, rng)
    for f in finsler_structures():
        rep = check_homogeneity(geodesic_geometry(f), samples, 2)
        assert rep.max_violation <= 1e-10, f.lg.name


def test_geodesic_geometry_zero_below_floor():
    g = geodesic_geometry(euclidean_structure())
    np.testing.assert_array_equal(g.h2(State([1.0, 2.0], [0.0, 0.0])), 0.0)


def test_geometric_terms_euclidean_closed_form():
    gt = geometric_terms(euclidean_structure(), State([0.3, 0.9], [1.0, 0.0]))
    np.testing.assert_allclose(gt.mg, [[0.0, 0.0], [0.0, 1.0]], atol=1e-10)
    np.testing.assert_allclose(gt.fg, 0.0, atol=1e-12)


def test_geometric_mass_rank_deficient_with_velocity_null_space():
    rng = np.random.default_rng(7)
    for f in finsler_structures():
        for s in random_states(2, 10, rng):
            gt = geometric_terms(f, s)
            svals = np.linalg.svd(gt.mg, compute_uv=False)
            assert svals[-1] <= 1e-10 * svals[0]
            assert np.linalg.norm(gt.mg @ s.xdot) <= 1e-8 * (1 + svals[0])


def test_geometric_force_orthogonal_to_velocity():
    rng = np.random.default_rng(8)
    for f in finsler_structures():
        for s in random_states(2, 10, rng):
            gt = geometric_terms(f, s)
            bound = 1e-8 * (1.0 + np.linalg.norm(gt.fg) * s.speed())
            assert abs(float(gt.fg @ s.xdot)) <= bound


def test_restriction_identity():
    rng = np.random.default_rng(9)
    for f in finsler_structures():
        for s in random_states(2, 10, rng):
            gt = geometric_terms(f, s)
            t = energy_terms(f, s)
            lhs = t.me @ gt.rpe @ t.me
            assert np.linalg.norm(lhs - gt.rxd) <= 1e-8 * (
                1.0 + np.linalg.norm(gt.rxd))


def test_verify_theorem2_zoo():
    rng = np.random.default_rng(10)
    for f in finsler_structures():
        for s in random_states(2, 5, rng, min_speed=0.5):
            rep = verify_theorem2(f, s, trials=8, seed=0)
            assert rep.ok(), (f.lg.name, rep)


def test_verify_theorem2_probe_has_teeth():
    """A small velocity-orthogonal perturbation must break the residual."""
    rng = np.random.default_rng(11)
    f = riemannian_structure(diagonal_polynomial_metric())
    for s in random_states(2, 5, rng, min_speed=0.5):
        gt = geometric_terms(f, s)
        t = energy_terms(f, s)
        base = solve_spd(t.me, t.fe)
        delta = project_perp(s.xdot, rng.standard_normal(2))
        delta *= 1e-3 / np.linalg.norm(delta)
        residual = np.linalg.norm(gt.mg @ (-base + delta) + gt.fg) \
            / (1.0 + np.linalg.norm(gt.fg))
        assert residual >= 1e-4


def test_explicit_solution_trades_energy_for_matching_action():
    """Along-velocity acceleration breaks energy conservation but leaves
    the structure's path action untouched (same points, different clock)."""
    from fabrics.geometry import AlphaProfile, reparameterize
    from fabrics.integrate import IntegratorConfig, energy_drift, integrate
    from fabrics.lagrangian import action
    from fabrics.zoo import geodesic_start, randers_structure

    f = randers_structure()
    geom = geodesic_geometry(f)
    gen = integrate(lambda s: -geom.h2(s), geodesic_start("randers"),
                    IntegratorConfig(step=1e-3, horizon=2.0))
    retimed = reparameterize(gen, AlphaProfile(lambda t: 0.4))
    assert energy_drift(retimed, f.le) > 1e-3
    a_gen = action(f.lg, gen).value
    a_ret = action(f.lg, retimed).value
    assert abs(a_ret - a_gen) <= 1e-4 * abs(a_gen)


def test_jet_evaluation_is_thread_safe():
    """Identical results when many threads evaluate one shared field."""
    from concurrent.futures import ThreadPoolExecutor

    from fabrics.autodiff import evaluate_jet

    f = finsler_structures()[2]
    rng = np.random.default_rng(12)
    samples = random_states(2, 40, rng)
    serial = [evaluate_jet(f.le, s) for s in samples]
    with ThreadPoolExecutor(max_workers=8) as pool:
        parallel = list(pool.map(lambda s: evaluate_jet(f.le, s), samples))
    for a, b in zip(serial, parallel):
        assert a.value == b.value
        np.testing.assert_array_equal(a.gradient, b.gradient)
        np.testing.assert_array_equal(a.hessian, b.hessian)


def test_geodesic_solve_raises_on_degenerate_tensor():
    lg = ScalarField(2, lambda x, v: v[0] + 2.0 * v[1])  # degenerate energy
    f = make_finsler(lg)
    g = geodesic_geometry(f)
    with pytest.raises(SingularMassError) as err:
        g.h2(State([0.0, 0.0], [1.0, 1.0]))
    assert err.value.condition >= 1e10
