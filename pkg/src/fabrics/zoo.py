"""Shared collections of fields, structures and metrics used by the
property suites and tests. Everything here is deterministic given a seed."""

from __future__ import annotations

import numpy as np

from .autodiff import ScalarField, dot, exp, norm, tanh
from .finsler import FinslerStructure, make_finsler
from .geometry import AlphaProfile, GeometryHandle
from .riemann import MetricField, riemannian_structure
from .state import State


def random_states(n: int, count: int, rng, x_scale: float = 1.0,
                  v_scale: float = 1.0, min_speed: float = 0.3) -> list[State]:
    """Random states with velocities bounded away from the degree-1 cusp."""
    out = []
    while len(out) < count:
        x = rng.uniform(-x_scale, x_scale, size=n)
        v = rng.uniform(-v_scale, v_scale, size=n)
        speed = np.linalg.norm(v)
        if speed < min_speed:
            continue
        out.append(State(x, v))
    return out


# ---- scalar fields for derivative checks ------------------------------------


def random_polynomial_field(n: int, rng, degree: int = 4) -> ScalarField:
    """Random dense polynomial over the 2n variables, scaled so values stay
    around unit size inside the sampling box (keeps the finite-difference
    oracle's rounding error below tolerance)."""
    m = 2 * n
    terms = []
    n_terms = 3 * m
    for _ in range(n_terms):
        exponents = rng.integers(0, degree + 1, size=m)
        while exponents.sum() > degree:
            exponents[rng.integers(0, m)] = 0
        coef = rng.uniform(-1.0, 1.0) / n_terms
        terms.append((coef, exponents.copy()))

    def eval_poly(x, v):
        z = list(x) + list(v)
        out = 0.0
        for coef, exps in terms:
            term = coef
            for k, e in enumerate(exps):
                for _ in range(int(e)):
                    term = term * z[k]
            out = term + out
        return out

    return ScalarField(n, eval_poly, name=f"poly{degree}")


def scalar_fields() -> list[ScalarField]:
    """The derivative-check zoo: quadratics, products, and transcendental
    compositions, all tame inside the unit sampling box."""
    fields = [
        ScalarField(2, lambda x, v: 0.5 * dot(v, v), name="kinetic"),
        ScalarField(2, lambda x, v: x[0] * v[0], name="bilinear"),
        ScalarField(2, lambda x, v: 0.5 * (1.0 + x[0] * x[0]) * v[0] * v[0]
                    + 0.5 * v[1] * v[1], name="diag_metric_energy"),
        ScalarField(2, lambda x, v: exp(0.5 * x[0]) * v[1] * v[1] * 0.3,
                    name="exp_weighted"),
        ScalarField(2, lambda x, v: tanh(x[0] + 0.5 * v[1]) * 0.7, name="tanh_mix"),
        ScalarField(2, lambda x, v: 0.4 / (2.0 + x[0] * x[0] + v[0] * v[0]),
                    name="rational"),
        ScalarField(2, lambda x, v: norm([v[0], v[1], 1.0 + 0.2 * x[0]]) * 0.5,
                    name="shifted_norm"),
    ]
    rng = np.random.default_rng(20240211)
    for _ in range(3):
        fields.append(random_polynomial_field(2, rng))
    return fields


# ---- metric zoo --------------------------------------------------------------


def identity_metric(n: int = 2) -> MetricField:
    def g(x):
        return [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]

    return MetricField(n, g, name="identity")


def diagonal_polynomial_metric() -> MetricField:
    def g(x):
        return [
            [1.0 + x[0] * x[0], 0.0],
            [0.0, 1.0 + 0.5 * x[1] * x[1]],
        ]

    return MetricField(2, g, name="diag_poly")


def dense_polynomial_metric() -> MetricField:
    # G = A(x)^T A(x) + eps I with polynomial A, SPD everywhere
    eps = 1e-3

    def g(x):
        a00, a01 = 1.0, 0.2 * x[1]
        a10, a11 = 0.15 * x[0], 1.0
        return [
            [a00 * a00 + a10 * a10 + eps, a00 * a01 + a10 * a11],
            [a01 * a00 + a11 * a10, a01 * a01 + a11 * a11 + eps],
        ]

    return MetricField(2, g, name="dense_poly")


def metric_fields() -> list[MetricField]:
    return [identity_metric(), diagonal_polynomial_metric(), dense_polynomial_metric()]


def random_polynomial_metric(n: int, rng) -> MetricField:
    """Random SPD metric A(x)^T A(x) + eps I with affine A entries."""
    base = np.eye(n) + rng.uniform(-0.2, 0.2, size=(n, n))
    lin = rng.uniform(-0.25, 0.25, size=(n, n, n))
    eps = 1e-3

    def g(x):
        a = [[base[i][j] + dot(lin[i][j], x) for j in range(n)] for i in range(n)]
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                entry = a[0][i] * a[0][j]
                for k in range(1, n):
                    entry = entry + a[k][i] * a[k][j]
                row.append(entry + (eps if i == j else 0.0))
            rows.append(row)
        return rows

    return MetricField(n, g, name="random_poly")


# ---- structure zoo -----------------------------------------------------------


def euclidean_structure(n: int = 2) -> FinslerStructure:
    lg = ScalarField(n, lambda x, v: norm(v), name="euclidean")
    return make_finsler(lg)


def randers_structure() -> FinslerStructure:
    """Lens-weighted norm plus a sub-unit drift one-form: positive,
    degree-1, and not induced by any metric tensor. The lens weight keeps
    geodesics orbiting through the curved region instead of escaping."""

    def lg_eval(x, v):
        w = 2.0 / (1.0 + dot(x, x))
        drift = 0.25 * (tanh(x[0]) * v[0] + tanh(x[1]) * v[1])
        return w * norm(v) + drift

    return make_finsler(ScalarField(2, lg_eval, name="randers"))


def quartic_structure() -> FinslerStructure:
    """Lens-weighted fourth-root length element; the Euclidean regularizer
    keeps the energy tensor well conditioned away from zero velocity."""

    def lg_eval(x, v):
        w = 2.0 / (1.0 + dot(x, x))
        sq = dot(v, v)
        quart = (1.0 + 0.5 * x[0] * x[0]) * v[0] ** 4 \
            + (1.0 + 0.5 * x[1] * x[1]) * v[1] ** 4
        return w * (0.36 * sq * sq + quart) ** 0.25

    return make_finsler(ScalarField(2, lg_eval, name="quartic"))


def finsler_structures() -> list[FinslerStructure]:
    """The structure zoo: three Riemannian, two genuinely non-Riemannian."""
    return [
        euclidean_structure(),
        riemannian_structure(diagonal_polynomial_metric()),
        riemannian_structure(dense_polynomial_metric()),
        randers_structure(),
        quartic_structure(),
    ]


def geodesic_start(structure_name: str) -> State:
    """Canonical start for geodesic energy runs: the lens-confined
    structures use an orbiting state so their drift sits above rounding
    level where the step-refinement ratio is measurable."""
    if structure_name in ("randers", "quartic"):
        return State(np.array([0.9, 0.0]), np.array([0.0, 2.2]))
    return State(np.array([0.3, -0.2]), np.array([0.8, 0.6]))


# ---- random geometries and retiming profiles ---------------------------------


def random_hd2_geometry(n: int, rng) -> GeometryHandle:
    """Random smooth degree-2 field: squared-speed times a polynomial
    position field, plus a mild velocity-aligned bilinear term."""
    c0 = rng.uniform(-0.25, 0.25, size=n)
    c1 = rng.uniform(-0.15, 0.15, size=(n, n))
    b = rng.uniform(-0.2, 0.2, size=n)

    def h2(s: State) -> np.ndarray:
        sq = float(s.xdot @ s.xdot)
        field = c0 + c1 @ np.tanh(s.x)
        return sq * field + float(b @ s.xdot) * s.xdot * 0.3

    return GeometryHandle(dim=n, h2=h2, label="random_hd2")


def random_alpha_profile(rng) -> AlphaProfile:
    a = rng.uniform(-0.4, 0.4)
    b = rng.uniform(-0.4, 0.4)
    w = rng.uniform(0.5, 2.0)

    def alpha(t: float) -> float:
        return a + b * np.sin(w * t)

    return AlphaProfile(alpha, label=f"{a:.2f}+{b:.2f}sin({w:.2f}t)")
