"""Small symmetric linear-algebra helpers with condition monitoring."""

from __future__ import annotations

import math

import numpy as np


class SingularMassError(ValueError):
    """A symmetric system matrix is rank deficient or too ill-conditioned.

    Carries the condition estimate so callers can distinguish an invertible
    energy tensor from a structurally rank-deficient geometric mass.
    """

    def __init__(self, condition: float, context: str = ""):
        self.condition = condition
        where = f" in {context}" if context else ""
        super().__init__(
            f"singular or ill-conditioned matrix{where} (condition estimate {condition:.3e})"
        )


def _sym_eig_bounds_2x2(a: np.ndarray) -> tuple[float, float]:
    p = float(a[0, 0])
    q = float(a[0, 1])
    r = float(a[1, 1])
    half_tr = 0.5 * (p + r)
    disc = math.sqrt(max(0.25 * (p - r) ** 2 + q * q, 0.0))
    return half_tr - disc, half_tr + disc


def symmetric_condition(a: np.ndarray) -> float:
    """Spectral condition number of a symmetric matrix; inf if not PD."""
    a = np.asarray(a, dtype=float)
    if a.shape == (1, 1):
        return 1.0 if a[0, 0] > 0.0 else math.inf
    if a.shape == (2, 2):
        lo, hi = _sym_eig_bounds_2x2(a)
    else:
        w = np.linalg.eigvalsh(a)
        lo, hi = float(w[0]), float(w[-1])
    if lo <= 0.0:
        return math.inf
    return hi / lo

def solve_spd(a: np.ndarray, b: np.ndarray, cond_limit: float = 1e10,
              context: str = "") -> np.ndarray:
    """Solve a x = b for symmetric positive definite ``a``.

    Closed-form for 2x2 (the hot case), eigendecomposition check plus
    standard solve otherwise.

    Raises:
        SingularMassError: if ``a`` is not PD within the condition limit.
    """
    if a.shape == (2, 2):
        p = a[0, 0]
        q = a[0, 1]
        r = a[1, 1]
        det = p * r - q * q
        # Sylvester: PD iff p > 0 and det > 0
        if p <= 0.0 or det <= 0.0:
            raise SingularMassError(math.inf, context)
        lo, hi = _sym_eig_bounds_2x2(a)
        if lo <= 0.0 or hi / lo >= cond_limit:
            raise SingularMassError(math.inf if lo <= 0.0 else hi / lo, context)
        return np.array(
            [(r * b[0] - q * b[1]) / det, (p * b[1] - q * b[0]) / det]
        )
    cond = symmetric_condition(a)
    if not math.isfinite(cond) or cond >= cond_limit:
        raise SingularMassError(cond, context)
    return np.linalg.solve(a, b)


def spd_sqrt(a: np.ndarray, context: str = "") -> np.ndarray:
    """Symmetric square root via eigendecomposition."""
    a = np.asarray(a, dtype=float)
    w, q = np.linalg.eigh(a)
    if w[0] <= 0.0:
        cond = math.inf
        raise SingularMassError(cond, context or "matrix square root")
    return (q * np.sqrt(w)) @ q.T
