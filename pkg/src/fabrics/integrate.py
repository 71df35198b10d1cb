"""Deterministic fixed-step RK4 integration of second-order systems with
per-sample diagnostics and step-refinement convergence checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .state import State

__all__ = [
    "Trajectory",
    "IntegratorConfig",
    "TargetBall",
    "SpeedLimit",
    "BarrierMargin",
    "IntegrationAborted",
    "integrate",
    "integrate_explicit",
    "energy_drift",
    "OrderEstimate",
    "refine_and_compare",
]


@dataclass
class Trajectory:
    """Time-stamped states with optional per-sample scalar diagnostics."""

    times: np.ndarray
    states: list[State]
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)
    stop_reason: str | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.states) != self.times.shape[0]:
            raise ValueError("times and states must align one to one")
        if self.times.shape[0] >= 2 and np.any(np.diff(self.times) <= 0.0):
            raise ValueError("trajectory times must be strictly increasing")
        for name, channel in self.diagnostics.items():
            if len(channel) != self.times.shape[0]:
                raise ValueError(f"diagnostic channel '{name}' length mismatch")

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def positions(self) -> np.ndarray:
        return np.stack([s.x for s in self.states])

    def velocities(self) -> np.ndarray:
        return np.stack([s.xdot for s in self.states])

    def final_state(self) -> State:
        return self.states[-1]

    def subtrajectory(self, start: int, stop: int) -> "Trajectory":
        return Trajectory(
            self.times[start:stop],
            self.states[start:stop],
            {k: v[start:stop] for k, v in self.diagnostics.items()},
            self.stop_reason,
        )


# ---- stop conditions --------------------------------------------------------


@dataclass(frozen=True)
class TargetBall:
    center: np.ndarray
    radius: float
    reason: str = "target_ball"

    def triggered(self, s: State, probe_row: Mapping[str, float]) -> bool:
        d = s.x - np.asarray(self.center, dtype=float)
        return float(np.sqrt(d @ d)) <= self.radius


@dataclass(frozen=True)
class SpeedLimit:
    max_speed: float
    reason: str = "speed_limit"

    def triggered(self, s: State, probe_row: Mapping[str, float]) -> bool:
        return s.speed() > self.max_speed


@dataclass(frozen=True)
class BarrierMargin:
    """Stop when a named probe channel falls below a floor."""

    probe: str
    floor: float

    @property
    def reason(self) -> str:
        return f"barrier_margin:{self.probe}"

    def triggered(self, s: State, probe_row: Mapping[str, float]) -> bool:
        return probe_row[self.probe] < self.floor


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step configuration.

    The requested step is adjusted to the nearest uniform value whose
    multiples land exactly on the horizon, so endpoint comparisons across
    refinements stay at matching times.
    """

    step: float
    horizon: float
    method: str = "rk4"
    stop_conditions: tuple = ()

    def __post_init__(self):
        if self.step <= 0.0 or self.horizon <= 0.0:
            raise ValueError("step and horizon must be positive")
        if self.step > self.horizon:
            raise ValueError("step must not exceed the horizon")
        if self.method != "rk4":
            raise ValueError(f"unsupported method '{self.method}'")

    @property
    def steps(self) -> int:
        return max(1, int(round(self.horizon / self.step)))

    @property
    def effective_step(self) -> float:
        return self.horizon / self.steps


class IntegrationAborted(RuntimeError):
    """Acceleration evaluation failed mid-run.

    Carries the partial trajectory up to the last accepted step and the
    failing time; the original evaluation error is chained as the cause.
    """

    def __init__(self, partial: Trajectory, time: float, cause: BaseException):
        self.partial = partial
        self.time = time
        super().__init__(f"integration aborted at t={time:.6g}: {cause}")


def _run(accel_t: Callable[[float, State], np.ndarray], s0: State,
         cfg: IntegratorConfig, probes: Mapping[str, Callable[[State], float]] | None,
         ) -> Trajectory:
    n = s0.dim
    steps = cfg.steps
    h = cfg.effective_step
    probes = dict(probes or {})
    channels: dict[str, list[float]] = {name: [] for name in probes}

    times = [0.0]
    states = [s0]
    for name, fn in probes.items():
        channels[name].append(float(fn(s0)))

    def finish(reason: str | None) -> Trajectory:
        diags = {name: np.array(vals) for name, vals in channels.items()}
        return Trajectory(np.array(times), states, diags, reason)

    y = np.concatenate((s0.x, s0.xdot))
    half = 0.5 * h
    sixth = h / 6.0
    t = 0.0
    for i in range(steps):
        t = i * h
        try:
            # classical RK4 on the first-order lift (x, xdot)
            s_a = State(y[:n], y[n:])
            k1 = np.concatenate((y[n:], accel_t(t, s_a)))
            y2 = y + half * k1
            s_b = State(y2[:n], y2[n:])
            k2 = np.concatenate((y2[n:], accel_t(t + half, s_b)))
            y3 = y + half * k2
            s_c = State(y3[:n], y3[n:])
            k3 = np.concatenate((y3[n:], accel_t(t + half, s_c)))
            y4 = y + h * k3
            s_d = State(y4[:n], y4[n:])
            k4 = np.concatenate((y4[n:], accel_t(t + h, s_d)))
        except (ArithmeticError, ValueError) as exc:
            partial = finish(f"aborted:{exc}")
            raise IntegrationAborted(partial, t, exc) from exc
        y = y + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t_next = (i + 1) * h
        s_next = State(y[:n], y[n:])
        row = {}
        try:
            for name, fn in probes.items():
                row[name] = float(fn(s_next))
        except (ArithmeticError, ValueError) as exc:
            partial = finish(f"aborted:{exc}")
            raise IntegrationAborted(partial, t_next, exc) from exc
        times.append(t_next)
        states.append(s_next)
        for name, val in row.items():
            channels[name].append(val)
        for cond in cfg.stop_conditions:
            if cond.triggered(s_next, row):
                return finish(cond.reason)
    return finish("horizon")


def integrate(accel: Callable[[State], np.ndarray], s0: State, cfg: IntegratorConfig,
              probes: Mapping[str, Callable[[State], float]] | None = None) -> Trajectory:
    """Classical RK4 on an autonomous second-order system.

    Probes are evaluated on accepted states only (not on RK4 stage points);
    stop conditions are checked after each accepted step and the triggering
    reason is always recorded, "horizon" marking a full run.

    Raises:
        IntegrationAborted: if the acceleration (or a probe) raises a domain
            error; the exception carries the partial trajectory.
    """
    return _run(lambda t, s: accel(s), s0, cfg, probes)


def integrate_explicit(geometry, profile, s0: State, cfg: IntegratorConfig,
                       probes: Mapping[str, Callable[[State], float]] | None = None,
                       ) -> Trajectory:
    """Integrate xddot + h2(x, xdot) + alpha(t) xdot = 0 for a time-varying
    along-velocity acceleration profile."""
    alpha = profile.alpha
    h2 = geometry.h2
    return _run(lambda t, s: -h2(s) - alpha(t) * s.xdot, s0, cfg, probes)


def energy_drift(traj: Trajectory, le) -> float:
    """Worst relative deviation of a scalar energy from its initial value."""
    if len(traj) == 0:
        raise ValueError("energy drift of an empty trajectory")
    e0 = le(traj.states[0])
    scale = max(abs(e0), 1e-12)
    worst = 0.0
    for s in traj.states:
        dev = abs(le(s) - e0)
        if dev > worst:
            worst = dev
    return worst / scale


@dataclass(frozen=True)
class OrderEstimate:
    order: float | None
    exact: bool


def refine_and_compare(accel: Callable[[State], np.ndarray], s0: State,
                       cfg: IntegratorConfig, factor: int = 2) -> OrderEstimate:
    """Observed convergence order from endpoint Richardson ratios.

    Runs at step h, h/factor and h/factor^2 and compares endpoint
    differences. Reports ``exact`` when the refinement differences sit at
    rounding level (polynomially exact systems).
    """
    if factor < 2:
        raise ValueError("refinement factor must be at least 2")
    ends = []
    for k in range(3):
        sub = IntegratorConfig(step=cfg.step / factor**k, horizon=cfg.horizon,
                               method=cfg.method)
        traj = _run(lambda t, s: accel(s), s0, sub, None)
        final = traj.final_state()
        ends.append(np.concatenate((final.x, final.xdot)))
    e1 = float(np.linalg.norm(ends[0] - ends[1]))
    e2 = float(np.linalg.norm(ends[1] - ends[2]))
    scale = 1.0 + float(np.linalg.norm(ends[2]))
    if e2 <= 1e-14 * scale:
        return OrderEstimate(order=None, exact=True)
    return OrderEstimate(order=math.log(e1 / e2) / math.log(factor), exact=False)
