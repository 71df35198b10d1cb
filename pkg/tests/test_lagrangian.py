"""Equation-of-motion extraction, Hamiltonians, and action integrals."""

import numpy as np
import pytest

from fabrics.autodiff import ScalarField, dot, norm
from fabrics.finsler import geometric_terms
from fabrics.geometry import AlphaProfile, reparameterize
from fabrics.integrate import IntegratorConfig, Trajectory, integrate
from fabrics.lagrangian import (SingularMassError, action, eom_terms,
                                hamiltonian, solved_acceleration)
from fabrics.state import State
from fabrics.zoo import (euclidean_structure, finsler_structures,
                         random_states)

FREE_PARTICLE = ScalarField(2, lambda x, v: 0.5 * dot(v, v))


def test_free_particle_terms():
    t = eom_terms(FREE_PARTICLE, State([0.4, 0.2], [9.0, -1.0]))
    np.testing.assert_allclose(t.mass, np.eye(2))
    np.testing.assert_allclose(t.force, 0.0)


def test_position_dependent_metric_force():
    # L = xdot . diag(1 + x0^2, 1) xdot / 2 at x=(1,0), v=(1,1)
    L = ScalarField(2, lambda x, v: 0.5 * ((1.0 + x[0] * x[0]) * v[0] * v[0]
                                           + v[1] * v[1]))
    t = eom_terms(L, State([1.0, 0.0], [1.0, 1.0]))
    np.testing.assert_allclose(t.mass, np.diag([2.0, 1.0]), atol=1e-12)
    np.testing.assert_allclose(t.force, [1.0, 0.0], atol=1e-12)


def test_translation_symmetry_zero_force():
    L = ScalarField(2, lambda x, v: 0.5 * dot(v, v) + v[0] * v[1])
    rng = np.random.default_rng(5)
    for s in random_states(2, 10, rng):
        t = eom_terms(L, s)
        np.testing.assert_allclose(t.force, 0.0, atol=1e-12)


def test_mass_symmetry():
    rng = np.random.default_rng(8)
    for f in finsler_structures():
        for s in random_states(2, 5, rng):
            t = eom_terms(f.le, s)
            np.testing.assert_allclose(t.mass, t.mass.T, atol=1e-10)


def test_solved_acceleration_identity_mass():
    t = eom_terms(FREE_PARTICLE, State([0.0, 0.0], [1.0, 1.0]))
    t = type(t)(mass=np.eye(2), force=np.array([3.0, -1.0]))
    np.testing.assert_allclose(solved_acceleration(t), [-3.0, 1.0])


def test_solved_acceleration_diagonal():
    from fabrics.lagrangian import EomTerms

    t = EomTerms(mass=np.diag([2.0, 1.0]), force=np.array([1.0, 0.0]))
    np.testing.assert_allclose(solved_acceleration(t), [-0.5, 0.0])


def test_solved_acceleration_rejects_geometric_mass():
    """The structure-side mass is rank n-1; solving it must fail loudly."""
    f = euclidean_structure()
    gt = geometric_terms(f, State([0.1, 0.2], [1.0, 0.0]))
    svals = np.linalg.svd(gt.mg, compute_uv=False)
    assert svals[-1] <= 1e-10 * svals[0]
    from fabrics.lagrangian import EomTerms

    with pytest.raises(SingularMassError) as err:
        solved_acceleration(EomTerms(mass=gt.mg, force=gt.fg))
    assert err.value.condition > 1e12


def test_hamiltonian_degree_two_equals_lagrangian():
    rng = np.random.default_rng(13)
    for f in finsler_structures():
        for s in random_states(2, 20, rng):
            le = f.le(s)
            assert hamiltonian(f.le, s) == pytest.approx(le, abs=1e-10 * (1 + abs(le)))


def test_hamiltonian_degree_one_vanishes():
    rng = np.random.default_rng(14)
    for f in finsler_structures():
        for s in random_states(2, 20, rng):
            h = hamiltonian(f.lg, s)
            assert abs(h) <= 1e-9 * (1.0 + abs(f.lg(s)))


def test_hamiltonian_classic_kinetic_minus_potential():
    L = ScalarField(2, lambda x, v: 0.5 * dot(v, v) - x[0])
    s = State([0.7, -0.4], [1.0, 2.0])
    assert hamiltonian(L, s) == pytest.approx(2.5 + 0.7)


def test_action_unit_integrand_measures_duration():
    ones = ScalarField(2, lambda x, v: 1.0)
    times = np.linspace(0.0, 3.0, 31)
    states = [State([t, 0.0], [1.0, 0.0]) for t in times]
    traj = Trajectory(times, states)
    assert action(ones, traj).value == pytest.approx(3.0)


def test_action_arc_length_of_straight_segment():
    speed_field = ScalarField(2, lambda x, v: norm(v))
    times = np.linspace(0.0, 2.0, 201)
    states = [State([t, 0.0], [1.0, 0.0]) for t in times]
    assert action(speed_field, Trajectory(times, states)).value == pytest.approx(2.0)


def test_action_additive_over_concatenation():
    f = finsler_structures()[1]
    geom_accel = _geodesic_accel(f)
    traj = integrate(geom_accel, State([0.2, 0.1], [0.9, 0.4]),
                     IntegratorConfig(step=1e-3, horizon=1.0))
    whole = action(f.lg, traj).value
    k = len(traj) // 2
    first = action(f.lg, traj.subtrajectory(0, k + 1)).value
    second = action(f.lg, traj.subtrajectory(k, len(traj))).value
    assert whole == pytest.approx(first + second, rel=1e-12)


def test_action_reparameterization_invariance():
    """The structure action along a path must not depend on the clock."""
    f = finsler_structures()[3]
    traj = integrate(_geodesic_accel(f), State([0.9, 0.0], [0.0, 1.1]),
                     IntegratorConfig(step=1e-3, horizon=2.0))
    retimed = reparameterize(traj, AlphaProfile(lambda t: 0.3 + 0.2 * np.sin(t)))
    a0 = action(f.lg, traj).value
    a1 = action(f.lg, retimed).value
    assert a1 == pytest.approx(a0, rel=1e-4)


def test_action_needs_two_samples():
    ones = ScalarField(2, lambda x, v: 1.0)
    traj = Trajectory(np.array([0.0]), [State([0.0, 0.0], [1.0, 0.0])])
    with pytest.raises(ValueError):
        action(ones, traj)


def test_hamiltonian_conserved_under_solved_acceleration():
    """Playing the equation of motion forward conserves the Hamiltonian,
    with drift falling at fourth order under step halving."""
    L = ScalarField(2, lambda x, v: 0.5 * (1.0 + x[0] * x[0]) * v[0] * v[0]
                    + 0.5 * v[1] * v[1] - 2.0 * (x[0] * x[0] + x[1] * x[1]))
    s0 = State([0.9, 0.4], [0.0, 1.2])
    h0 = hamiltonian(L, s0)
    scale = max(abs(h0), 1e-12)

    def accel(s):
        return solved_acceleration(eom_terms(L, s))

    drifts = []
    for h in (2e-2, 1e-2):
        traj = integrate(accel, s0, IntegratorConfig(step=h, horizon=2.0))
        worst = max(abs(hamiltonian(L, s) - h0) for s in traj.states[::10])
        drifts.append(worst / scale)
    assert drifts[0] <= 1e-5
    assert drifts[0] / drifts[1] >= 8.0


def _geodesic_accel(f):
    from fabrics.finsler import geodesic_geometry

    geom = geodesic_geometry(f)
    return lambda s: -geom.h2(s)
