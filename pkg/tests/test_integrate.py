"""Fixed-step RK4: accuracy, diagnostics, stop conditions, aborts, and
step-refinement order estimates."""

import numpy as np
import pytest

from fabrics.geometry import circle_barrier_geometry, circle_distance_field
from fabrics.integrate import (BarrierMargin, IntegrationAborted,
                               IntegratorConfig, SpeedLimit, TargetBall,
                               Trajectory, energy_drift, integrate,
                               refine_and_compare)
from fabrics.state import State
from fabrics.zoo import diagonal_polynomial_metric
from fabrics.riemann import riemannian_structure
from fabrics.finsler import geodesic_geometry


def test_free_particle_exact():
    traj = integrate(lambda s: np.zeros(2), State([0.0, 0.0], [1.0, 0.0]),
                     IntegratorConfig(step=0.01, horizon=1.0))
    np.testing.assert_allclose(traj.final_state().x, [1.0, 0.0], atol=1e-12)
    assert traj.stop_reason == "horizon"
    assert len(traj) == 101


def test_harmonic_oscillator_period():
    traj = integrate(lambda s: -s.x, State([1.0, 0.0], [0.0, 0.0]),
                     IntegratorConfig(step=1e-3, horizon=2.0 * np.pi))
    np.testing.assert_allclose(traj.final_state().x, [1.0, 0.0], atol=1e-9)


def test_rk4_fourth_order_on_oscillator():
    errors = []
    for h in (1e-2, 5e-3, 2.5e-3):
        traj = integrate(lambda s: -s.x, State([1.0, 0.0], [0.0, 0.0]),
                         IntegratorConfig(step=h, horizon=2.0 * np.pi))
        final = traj.final_state()
        err = np.concatenate([final.x - np.array([1.0, 0.0]), final.xdot])
        errors.append(np.linalg.norm(err))
    assert errors[0] / errors[1] == pytest.approx(16.0, rel=0.3)
    assert errors[1] / errors[2] == pytest.approx(16.0, rel=0.3)


def test_barrier_run_never_penetrates():
    g = circle_barrier_geometry((0.0, 0.0), 1.0, 0.7, 0.5)
    phi = circle_distance_field((0.0, 0.0), 1.0)
    traj = integrate(lambda s: -g.h2(s), State([-3.0, -0.3], [1.5, 0.0]),
                     IntegratorConfig(step=1e-3, horizon=4.0),
                     probes={"min_phi": phi})
    assert np.min(traj.diagnostics["min_phi"]) > 0.0


def test_probes_align_with_samples():
    traj = integrate(lambda s: np.zeros(1), State([0.0], [1.0]),
                     IntegratorConfig(step=0.1, horizon=1.0),
                     probes={"pos": lambda s: float(s.x[0])})
    np.testing.assert_allclose(traj.diagnostics["pos"],
                               [s.x[0] for s in traj.states])


def test_energy_drift_free_particle_zero():
    from fabrics.zoo import euclidean_structure

    f = euclidean_structure()
    traj = integrate(lambda s: np.zeros(2), State([0.0, 0.0], [0.6, 0.8]),
                     IntegratorConfig(step=1e-2, horizon=2.0))
    assert energy_drift(traj, f.le) == 0.0


def test_energy_drift_riemannian_geodesic():
    f = riemannian_structure(diagonal_polynomial_metric())
    geom = geodesic_geometry(f)
    traj = integrate(lambda s: -geom.h2(s), State([0.3, -0.2], [0.8, 0.6]),
                     IntegratorConfig(step=1e-3, horizon=2.0))
    assert energy_drift(traj, f.le) <= 1e-6


def test_energy_not_conserved_with_along_velocity_term():
    f = riemannian_structure(diagonal_polynomial_metric())
    geom = geodesic_geometry(f)
    traj = integrate(lambda s: -geom.h2(s) - 1.0 * s.xdot,
                     State([0.3, -0.2], [0.8, 0.6]),
                     IntegratorConfig(step=1e-3, horizon=2.0))
    assert energy_drift(traj, f.le) > 1e-3


def test_stop_target_ball():
    cond = TargetBall(center=np.array([1.0, 0.0]), radius=0.05)
    traj = integrate(lambda s: np.zeros(2), State([0.0, 0.0], [1.0, 0.0]),
                     IntegratorConfig(step=0.01, horizon=5.0,
                                      stop_conditions=(cond,)))
    assert traj.stop_reason == "target_ball"
    assert np.linalg.norm(traj.final_state().x - [1.0, 0.0]) <= 0.05 + 1e-12


def test_stop_speed_limit():
    cond = SpeedLimit(max_speed=2.0)
    traj = integrate(lambda s: s.xdot.copy(), State([0.0, 0.0], [1.0, 0.0]),
                     IntegratorConfig(step=0.01, horizon=5.0,
                                      stop_conditions=(cond,)))
    assert traj.stop_reason == "speed_limit"
    assert traj.times[-1] < 5.0


def test_stop_barrier_margin_uses_probe():
    g = circle_barrier_geometry((0.0, 0.0), 1.0, 0.7, 0.5)
    phi = circle_distance_field((0.0, 0.0), 1.0)
    cond = BarrierMargin(probe="min_phi", floor=1.0)
    traj = integrate(lambda s: -g.h2(s), State([-3.0, 0.0], [1.5, 0.0]),
                     IntegratorConfig(step=1e-3, horizon=5.0,
                                      stop_conditions=(cond,)),
                     probes={"min_phi": phi})
    assert traj.stop_reason == "barrier_margin:min_phi"
    assert traj.diagnostics["min_phi"][-1] < 1.0


def test_abort_carries_partial_trajectory():
    g = circle_barrier_geometry((0.0, 0.0), 1.0, 0.7, 0.5)
    # forced straight through the obstacle: the barrier evaluation aborts
    with pytest.raises(IntegrationAborted) as err:
        integrate(lambda s: -g.h2(State(s.x, np.zeros(2))) + np.zeros(2),
                  State([-2.0, 0.0], [3.0, 0.0]),
                  IntegratorConfig(step=0.05, horizon=2.0))
    partial = err.value.partial
    assert isinstance(partial, Trajectory)
    assert partial.stop_reason.startswith("aborted:")
    assert len(partial) >= 1
    assert err.value.time > 0.0


def test_refine_and_compare_oscillator():
    est = refine_and_compare(lambda s: -s.x, State([1.0, 0.0], [0.0, 0.0]),
                             IntegratorConfig(step=1e-2, horizon=1.0))
    assert not est.exact
    assert est.order == pytest.approx(4.0, abs=0.3)


def test_refine_and_compare_free_particle_exact():
    est = refine_and_compare(lambda s: np.zeros(2),
                             State([0.0, 0.0], [1.0, 0.0]),
                             IntegratorConfig(step=1e-2, horizon=1.0))
    assert est.exact
    assert est.order is None


def test_refine_and_compare_barrier_geometry():
    g = circle_barrier_geometry((0.0, 0.0), 1.0, 0.7, 0.5)
    est = refine_and_compare(lambda s: -g.h2(s),
                             State([-3.0, -0.4], [1.2, 0.0]),
                             IntegratorConfig(step=2e-2, horizon=1.5))
    assert not est.exact
    assert 3.5 <= est.order <= 4.5


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(step=0.0, horizon=1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(step=2.0, horizon=1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(step=0.1, horizon=1.0, method="euler")


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), [State([0.0], [0.0])] * 2)
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0]), [State([0.0], [0.0])])
