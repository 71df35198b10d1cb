"""Derivative engine: worked examples, the finite-difference oracle, and
algebraic properties of the jet arithmetic."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fabrics.autodiff import (HyperDual, JetDomainError, ScalarField,
                              dot, evaluate_jet, exp, finite_difference_jet,
                              log, norm, sqrt, tanh)
from fabrics.state import State
from fabrics.zoo import random_states, scalar_fields


def test_kinetic_example():
    f = ScalarField(2, lambda x, v: 0.5 * dot(v, v))
    jet = evaluate_jet(f, State([7.0, -3.0], [1.0, 2.0]))
    assert jet.value == pytest.approx(2.5)
    np.testing.assert_allclose(jet.grad_v, [1.0, 2.0])
    np.testing.assert_allclose(jet.hess_vv, np.eye(2))
    np.testing.assert_allclose(jet.grad_x, 0.0)
    np.testing.assert_allclose(jet.hess_xx, 0.0)


def test_bilinear_example():
    f = ScalarField(2, lambda x, v: x[0] * v[0])
    jet = evaluate_jet(f, State([3.0, 0.0], [2.0, 0.0]))
    assert jet.value == pytest.approx(6.0)
    np.testing.assert_allclose(jet.grad_x, [2.0, 0.0])
    np.testing.assert_allclose(jet.grad_v, [3.0, 0.0])
    assert jet.hess_xv[0, 0] == pytest.approx(1.0)


def test_constant_field_fd_is_exact():
    f = ScalarField(2, lambda x, v: 1.25)
    jet = finite_difference_jet(f, State([0.1, 0.2], [0.3, 0.4]), step=1e-5)
    np.testing.assert_array_equal(jet.gradient, 0.0)
    np.testing.assert_array_equal(jet.hessian, 0.0)


def test_fd_constant_hessian():
    f = ScalarField(2, lambda x, v: dot(v, v))
    jet = finite_difference_jet(f, State([0.5, -1.0], [0.7, 0.1]), step=1e-5)
    np.testing.assert_allclose(jet.hess_vv, 2.0 * np.eye(2), atol=1e-6)


def test_exp_field_matches_fd():
    f = ScalarField(2, lambda x, v: exp(x[0]) * v[1] * v[1])
    s = State([0.5, 0.0], [0.0, 1.5])
    exact = evaluate_jet(f, s)
    approx = finite_difference_jet(f, s, step=1e-5)
    np.testing.assert_allclose(exact.gradient, approx.gradient, atol=1e-5)
    np.testing.assert_allclose(exact.hessian, approx.hessian, atol=1e-5)


def test_field_zoo_against_fd_oracle():
    rng = np.random.default_rng(42)
    for f in scalar_fields():
        for s in random_states(f.arity, 25, rng, min_speed=0.0):
            exact = evaluate_jet(f, s)
            approx = finite_difference_jet(f, s, step=1e-5)
            assert abs(exact.value - approx.value) <= 1e-5
            np.testing.assert_allclose(exact.gradient, approx.gradient,
                                       atol=1e-5)
            np.testing.assert_allclose(exact.hessian, approx.hessian,
                                       atol=1e-5)


def test_hessian_symmetric_exactly():
    rng = np.random.default_rng(7)
    for f in scalar_fields():
        for s in random_states(f.arity, 5, rng):
            jet = evaluate_jet(f, s)
            np.testing.assert_array_equal(jet.hessian, jet.hessian.T)
            np.testing.assert_array_equal(jet.hess_vx, jet.hess_xv.T)


def test_jet_product_rule():
    """jet(f*g) must equal the jet-level product of jet(f) and jet(g)."""
    rng = np.random.default_rng(11)
    fields = scalar_fields()
    for fa, fb in zip(fields[:4], fields[3:7]):
        prod = ScalarField(2, lambda x, v, fa=fa, fb=fb: fa.eval(x, v) * fb.eval(x, v))
        for s in random_states(2, 5, rng):
            ja = evaluate_jet(fa, s)
            jb = evaluate_jet(fb, s)
            jp = evaluate_jet(prod, s)
            assert jp.value == pytest.approx(ja.value * jb.value, abs=1e-12)
            np.testing.assert_allclose(
                jp.gradient, ja.value * jb.gradient + jb.value * ja.gradient,
                atol=1e-12)
            expected_hess = (ja.value * jb.hessian + jb.value * ja.hessian
                             + np.outer(ja.gradient, jb.gradient)
                             + np.outer(jb.gradient, ja.gradient))
            np.testing.assert_allclose(jp.hessian, expected_hess, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3),
       fa=st.floats(-2, 2), fb=st.floats(-2, 2))
def test_hyperdual_mul_commutes(a, b, fa, fb):
    u = HyperDual(a, fa, fb, 0.3)
    w = HyperDual(b, fb, fa, -0.1)
    p = u * w
    q = w * u
    assert p.f == pytest.approx(q.f)
    assert p.fa == pytest.approx(q.fa)
    assert p.fb == pytest.approx(q.fb)
    assert p.fab == pytest.approx(q.fab)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(0.1, 5.0))
def test_sqrt_chain_rule(x):
    z = HyperDual(x, 1.0, 1.0, 0.0)
    out = sqrt(z)
    assert out.f == pytest.approx(math.sqrt(x))
    assert out.fa == pytest.approx(0.5 / math.sqrt(x))
    assert out.fab == pytest.approx(-0.25 * x ** -1.5)


def test_unary_primitives_match_fd():
    fields = [
        ScalarField(1, lambda x, v: log(2.0 + x[0]) * v[0]),
        ScalarField(1, lambda x, v: tanh(x[0] * v[0])),
        ScalarField(1, lambda x, v: sqrt(1.5 + x[0] * x[0]) * v[0] * v[0]),
        ScalarField(1, lambda x, v: (1.0 + v[0] * v[0]) ** 1.5),
    ]
    s = State([0.4], [0.8])
    for f in fields:
        exact = evaluate_jet(f, s)
        approx = finite_difference_jet(f, s, step=1e-5)
        np.testing.assert_allclose(exact.hessian, approx.hessian, atol=1e-5)


def test_sqrt_domain_error_at_zero():
    f = ScalarField(1, lambda x, v: norm(v))
    with pytest.raises(JetDomainError, match="sqrt"):
        evaluate_jet(f, State([0.0], [0.0]))


def test_division_domain_error():
    f = ScalarField(1, lambda x, v: 1.0 / x[0])
    with pytest.raises(JetDomainError, match="division"):
        evaluate_jet(f, State([0.0], [1.0]))


def test_log_domain_error():
    f = ScalarField(1, lambda x, v: log(x[0]))
    with pytest.raises(JetDomainError, match="log"):
        evaluate_jet(f, State([-1.0], [1.0]))


def test_power_domain_error():
    f = ScalarField(1, lambda x, v: x[0] ** 0.5)
    with pytest.raises(JetDomainError, match="power"):
        evaluate_jet(f, State([0.0], [1.0]))


def test_arity_mismatch_rejected():
    f = ScalarField(3, lambda x, v: dot(v, v))
    with pytest.raises(ValueError, match="arity"):
        evaluate_jet(f, State([0.0], [1.0]))


def test_fd_step_must_be_positive():
    f = ScalarField(1, lambda x, v: v[0])
    with pytest.raises(ValueError):
        finite_difference_jet(f, State([0.0], [1.0]), step=0.0)


def test_jet_block_shapes():
    f = ScalarField(3, lambda x, v: dot(x, v))
    jet = evaluate_jet(f, State([1.0, 2.0, 3.0], [4.0, 5.0, 6.0]))
    assert jet.dim == 3
    assert jet.gradient.shape == (6,)
    assert jet.hess_xv.shape == (3, 3)
    np.testing.assert_allclose(jet.hess_xv, np.eye(3))


def test_gradient_of_position_map():
    from fabrics.autodiff import gradient_of

    grad = gradient_of(lambda x: x[0] * x[0] + 3.0 * x[1], np.array([2.0, -1.0]))
    np.testing.assert_allclose(grad, [4.0, 3.0])
    grad_const = gradient_of(lambda x: 7.5, np.array([0.3, 0.4]))
    np.testing.assert_allclose(grad_const, 0.0)
