"""Configuration-space state: a position paired with a velocity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


_FLOAT = np.dtype(np.float64)


@dataclass(frozen=True, slots=True)
class State:
    """Position ``x`` and velocity ``xdot`` in n-dimensional configuration space.

    Both arrays are coerced to 1-d float vectors of equal length. Instances
    are immutable and safe to share across threads.
    """

    x: np.ndarray
    xdot: np.ndarray

    def __post_init__(self):
        x = self.x
        v = self.xdot
        if type(x) is not np.ndarray or x.dtype is not _FLOAT:
            x = np.asarray(x, dtype=float)
            object.__setattr__(self, "x", x)
        if type(v) is not np.ndarray or v.dtype is not _FLOAT:
            v = np.asarray(v, dtype=float)
            object.__setattr__(self, "xdot", v)
        if x.ndim != 1 or x.shape != v.shape:
            raise ValueError(
                f"state needs matching 1-d position/velocity, got {x.shape} and {v.shape}"
            )

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    def speed(self) -> float:
        return float(np.sqrt(self.xdot @ self.xdot))

    def with_velocity(self, xdot) -> "State":
        return State(self.x, xdot)

    def scaled_velocity(self, factor: float) -> "State":
        return State(self.x, factor * self.xdot)
