"""Exact first- and second-order derivatives of scalar fields over (x, xdot).

The engine evaluates a field once per direction pair (i, j) using truncated
second-order Taylor scalars (hyper-dual numbers) carrying two seed
directions. With m = 2n variables this takes m(m+1)/2 = n(2n+1) evaluations
and assembles the full gradient and a Hessian that is symmetric by
construction. A central finite-difference fallback serves as the
independent oracle.

Fields are written against the generic helpers in this module (``dot``,
``norm``, ``sqrt``, ``exp``, ``log``, ``tanh``) so the same code runs on
plain floats and on jet scalars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .state import State

__all__ = [
    "JetDomainError",
    "HyperDual",
    "ScalarField",
    "Jet2",
    "evaluate_jet",
    "finite_difference_jet",
    "gradient_of",
    "sqrt",
    "exp",
    "log",
    "tanh",
    "dot",
    "norm",
]


class JetDomainError(ArithmeticError):
    """A differentiation primitive was evaluated at a singular point.

    Carries the offending sub-expression class in ``op`` (one of "sqrt",
    "log", "division", "power").
    """

    def __init__(self, op: str, detail: str = ""):
        self.op = op
        msg = f"jet arithmetic domain error in '{op}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class HyperDual:
    """Second-order Taylor scalar with two seed directions.

    Components: value ``f``, directional derivatives ``fa``, ``fb`` and the
    mixed second derivative ``fab``. The algebra is the hyper-dual algebra
    eps_a^2 = eps_b^2 = 0, eps_a*eps_b != 0, which propagates first and
    second derivatives exactly through smooth primitives.
    """

    __slots__ = ("f", "fa", "fb", "fab")

    def __init__(self, f: float, fa: float = 0.0, fb: float = 0.0, fab: float = 0.0):
        self.f = f
        self.fa = fa
        self.fb = fb
        self.fab = fab

    # ---- ring operations -------------------------------------------------

    def __add__(self, o):
        if o.__class__ is HyperDual:
            return HyperDual(self.f + o.f, self.fa + o.fa, self.fb + o.fb, self.fab + o.fab)
        return HyperDual(self.f + o, self.fa, self.fb, self.fab)

    __radd__ = __add__

    def __sub__(self, o):
        if o.__class__ is HyperDual:
            return HyperDual(self.f - o.f, self.fa - o.fa, self.fb - o.fb, self.fab - o.fab)
        return HyperDual(self.f - o, self.fa, self.fb, self.fab)

    def __rsub__(self, o):
        return HyperDual(o - self.f, -self.fa, -self.fb, -self.fab)

    def __neg__(self):
        return HyperDual(-self.f, -self.fa, -self.fb, -self.fab)

    def __mul__(self, o):
        if o.__class__ is HyperDual:
            return HyperDual(
                self.f * o.f,
                self.fa * o.f + self.f * o.fa,
                self.fb * o.f + self.f * o.fb,
                self.fab * o.f + self.fa * o.fb + self.fb * o.fa + self.f * o.fab,
            )
        return HyperDual(self.f * o, self.fa * o, self.fb * o, self.fab * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if o.__class__ is HyperDual:
            g = o.f
            if g == 0.0:
                raise JetDomainError("division", "denominator value is zero")
            q = self.f / g
            qa = (self.fa - q * o.fa) / g
            qb = (self.fb - q * o.fb) / g
            qab = (self.fab - q * o.fab - qa * o.fb - qb * o.fa) / g
            return HyperDual(q, qa, qb, qab)
        if o == 0.0:
            raise JetDomainError("division", "denominator value is zero")
        inv = 1.0 / o
        return HyperDual(self.f * inv, self.fa * inv, self.fb * inv, self.fab * inv)

    def __rtruediv__(self, o):
        f = self.f
        if f == 0.0:
            raise JetDomainError("division", "denominator value is zero")
        inv = 1.0 / f
        # o * (1/self); chain rule on u -> 1/u
        return self._lift(o * inv, -o * inv * inv, 2.0 * o * inv * inv * inv)

    def __pow__(self, p):
        if p.__class__ is HyperDual:
            raise TypeError("jet exponents are not supported; compose exp/log instead")
        f = self.f
        p = float(p)
        if f == 0.0:
            if p == round(p) and p >= 1.0:
                d1 = 1.0 if p == 1.0 else 0.0
                d2 = 2.0 if p == 2.0 else 0.0
                return self._lift(0.0, d1, d2)
            raise JetDomainError("power", f"0.0 ** {p} is not twice differentiable")
        if f < 0.0 and p != round(p):
            raise JetDomainError("power", f"negative base {f} with fractional exponent {p}")
        v = f ** p
        d1 = p * f ** (p - 1.0)
        d2 = p * (p - 1.0) * f ** (p - 2.0)
        return self._lift(v, d1, d2)

    # ---- unary chain rule -------------------------------------------------

    def _lift(self, v: float, d1: float, d2: float) -> "HyperDual":
        """Compose with a scalar map given its value and two derivatives."""
        return HyperDual(
            v,
            d1 * self.fa,
            d1 * self.fb,
            d1 * self.fab + d2 * self.fa * self.fb,
        )

    def _sqrt(self):
        f = self.f
        if f <= 0.0:
            raise JetDomainError("sqrt", f"argument {f} (cusp at zero)")
        v = math.sqrt(f)
        d1 = 0.5 / v
        return self._lift(v, d1, -0.5 * d1 / f)

    def _exp(self):
        v = math.exp(self.f)
        return self._lift(v, v, v)

    def _log(self):
        f = self.f
        if f <= 0.0:
            raise JetDomainError("log", f"argument {f}")
        inv = 1.0 / f
        return self._lift(math.log(f), inv, -inv * inv)

    def _tanh(self):
        v = math.tanh(self.f)
        sech2 = 1.0 - v * v
        return self._lift(v, sech2, -2.0 * v * sech2)

    def __repr__(self):
        return f"HyperDual({self.f}, {self.fa}, {self.fb}, {self.fab})"


# ---- generic scalar primitives (work on floats and jets alike) ------------


def sqrt(z):
    if isinstance(z, HyperDual):
        return z._sqrt()
    return math.sqrt(z)


def exp(z):
    if isinstance(z, HyperDual):
        return z._exp()
    return math.exp(z)


def log(z):
    if isinstance(z, HyperDual):
        return z._log()
    return math.log(z)


def tanh(z):
    if isinstance(z, HyperDual):
        return z._tanh()
    return math.tanh(z)


def dot(u: Sequence, v: Sequence):
    """Inner product over generic scalars (floats or jets)."""
    out = u[0] * v[0]
    for k in range(1, len(u)):
        out = out + u[k] * v[k]
    return out


def norm(v: Sequence):
    """Euclidean norm; in jet arithmetic this has a genuine cusp at zero."""
    return sqrt(dot(v, v))


# ---- fields and jets -------------------------------------------------------


@dataclass(frozen=True)
class ScalarField:
    """A smooth scalar function of (x, xdot), evaluable in jet arithmetic.

    ``eval(x, xdot)`` receives two sequences whose entries are either plain
    floats or jet scalars; it must be pure and composed of the supported
    primitives (+, -, *, /, power, sqrt, exp, log, tanh, dot, norm).
    """

    arity: int
    eval: Callable[[Sequence, Sequence], object]
    name: str = ""

    def __call__(self, s: State) -> float:
        return float(self.eval(s.x, s.xdot))


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian of a field at one state.

    The 2n-vector gradient is ordered [d/dx | d/dxdot]; the 2n x 2n Hessian
    is stored with the same ordering and is symmetric by construction.
    """

    value: float
    gradient: np.ndarray
    hessian: np.ndarray

    @property
    def dim(self) -> int:
        return self.gradient.shape[0] // 2

    @property
    def grad_x(self) -> np.ndarray:
        return self.gradient[: self.dim]

    @property
    def grad_v(self) -> np.ndarray:
        return self.gradient[self.dim:]

    @property
    def hess_xx(self) -> np.ndarray:
        n = self.dim
        return self.hessian[:n, :n]

    @property
    def hess_xv(self) -> np.ndarray:
        n = self.dim
        return self.hessian[:n, n:]

    @property
    def hess_vx(self) -> np.ndarray:
        n = self.dim
        return self.hessian[n:, :n]

    @property
    def hess_vv(self) -> np.ndarray:
        n = self.dim
        return self.hessian[n:, n:]


def _check_arity(f: ScalarField, s: State) -> None:
    if s.dim != f.arity:
        raise ValueError(f"state dimension {s.dim} does not match field arity {f.arity}")


def evaluate_jet(f: ScalarField, s: State) -> Jet2:
    """Exact value, gradient and Hessian of ``f`` at ``s``.

    One field evaluation per unordered direction pair; the (i, i)
    evaluations double as gradient reads. Exact to machine precision for
    compositions of the supported primitives.

    Raises:
        JetDomainError: if the field hits a singular primitive at ``s``.
    """
    _check_arity(f, s)
    n = f.arity
    m = 2 * n
    z = np.concatenate((s.x, s.xdot))
    # Local scratch jets, reseeded per pair; they never escape this call
    # with live seeds because outputs are copied out immediately.
    cells = [HyperDual(float(zk)) for zk in z]
    xs = cells[:n]
    vs = cells[n:]
    grad = np.empty(m)
    hess = np.empty((m, m))
    value = 0.0
    for i in range(m):
        ci = cells[i]
        ci.fa = 1.0
        for j in range(i, m):
            cj = cells[j]
            cj.fb = 1.0
            out = f.eval(xs, vs)
            if not isinstance(out, HyperDual):
                out = HyperDual(float(out))
            hess[i, j] = out.fab
            hess[j, i] = out.fab
            if i == j:
                grad[i] = out.fa
                if i == 0:
                    value = out.f
            cj.fb = 0.0
        ci.fa = 0.0
    return Jet2(value, grad, hess)


def gradient_of(fn: Callable, x: np.ndarray) -> np.ndarray:
    """Gradient of a jet-evaluable scalar map of position only."""
    n = len(x)
    cells = [HyperDual(float(xk)) for xk in x]
    grad = np.empty(n)
    for i in range(n):
        cells[i].fa = 1.0
        out = fn(cells)
        grad[i] = out.fa if isinstance(out, HyperDual) else 0.0
        cells[i].fa = 0.0
    return grad


def finite_difference_jet(f: ScalarField, s: State, step: float = 1e-5) -> Jet2:
    """Central-difference estimate of the jet; O(step^2) accurate.

    This is the independent oracle for :func:`evaluate_jet` and shares no
    code with it beyond plain evaluation of the field.
    """
    _check_arity(f, s)
    if step <= 0.0:
        raise ValueError("finite-difference step must be positive")
    n = f.arity
    m = 2 * n
    z0 = np.concatenate((s.x, s.xdot))

    def ev(z):
        return float(f.eval(z[:n], z[n:]))

    f0 = ev(z0)
    grad = np.empty(m)
    hess = np.empty((m, m))
    h = step
    for i in range(m):
        zp = z0.copy()
        zm = z0.copy()
        zp[i] += h
        zm[i] -= h
        fp = ev(zp)
        fm = ev(zm)
        grad[i] = (fp - fm) / (2.0 * h)
        hess[i, i] = (fp - 2.0 * f0 + fm) / (h * h)
    for i in range(m):
        for j in range(i + 1, m):
            zpp = z0.copy()
            zpm = z0.copy()
            zmp = z0.copy()
            zmm = z0.copy()
            zpp[i] += h
            zpp[j] += h
            zpm[i] += h
            zpm[j] -= h
            zmp[i] -= h
            zmp[j] += h
            zmm[i] -= h
            zmm[j] -= h
            val = (ev(zpp) - ev(zpm) - ev(zmp) + ev(zmm)) / (4.0 * h * h)
            hess[i, j] = val
            hess[j, i] = val
    return Jet2(f0, grad, hess)
