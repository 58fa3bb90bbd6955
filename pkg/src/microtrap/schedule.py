"""Desired-trajectory generation and step-count / speed criteria."""

from dataclasses import dataclass
import math

import numpy as np

SMOOTHSTEP = "smoothstep"
LINEAR = "linear"
COSINE = "cosine"
SCHEDULE_KINDS = (SMOOTHSTEP, LINEAR, COSINE)


def schedule_value(kind, s):
    """Monotone interpolant on [0, 1] with value(0) = 0 and value(1) = 1.

    smoothstep is the quintic 10*s^3 - 15*s^4 + 6*s^5 (zero first and second
    derivatives at both ends); cosine is (1 - cos(pi*s))/2; linear is s.
    Accepts scalars or arrays.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise ValueError(f"schedule argument outside [0, 1]: {s}")
    if kind == SMOOTHSTEP:
        out = ((6.0 * s - 15.0) * s + 10.0) * s**3
    elif kind == LINEAR:
        out = s.copy()
    elif kind == COSINE:
        out = 0.5 * (1.0 - np.cos(np.pi * s))
    else:
        raise ValueError(
            f"unknown schedule kind {kind!r}; expected one of {SCHEDULE_KINDS}"
        )
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TransportPlan:
    """Trajectory request: where to move the trap, in how many steps."""

    start: np.ndarray           # m
    displacement: np.ndarray    # m
    step_count: int
    kind: str = SMOOTHSTEP
    durations: tuple = ()       # seconds, the T values to evaluate

    def __post_init__(self):
        start = np.asarray(self.start, dtype=float)
        disp = np.asarray(self.displacement, dtype=float)
        for name, arr in (("start", start), ("displacement", disp)):
            if arr.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector")
            arr.setflags(write=False)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "displacement", disp)
        object.__setattr__(self, "step_count", int(self.step_count))
        object.__setattr__(self, "durations",
                           tuple(float(t) for t in self.durations))
        if self.step_count < 1:
            raise ValueError("step_count must be >= 1")
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if any(t <= 0 for t in self.durations):
            raise ValueError("durations must all be positive")


def desired_trajectory(plan):
    """Sampled desired trap positions, shape (step_count + 1, 3).

    Sample i is start + schedule(i/N) * displacement; both endpoints are
    exact because every schedule kind maps 0 -> 0 and 1 -> 1 exactly.
    """
    n = plan.step_count
    s = np.arange(n + 1, dtype=float) / n
    values = schedule_value(plan.kind, s)
    return plan.start[None, :] + values[:, None] * plan.displacement[None, :]


def minimum_step_count(delta_x, r_tf_1, margin=1.0):
    """Smallest N keeping the per-step shift below R_TF,1 / margin."""
    if delta_x <= 0 or r_tf_1 <= 0 or margin <= 0:
        raise ValueError("delta_x, r_tf_1 and margin must all be positive")
    return int(math.ceil(margin * delta_x / r_tf_1))


def step_velocities(trajectory, duration):
    """Per-step velocities for a trajectory traversed in ``duration`` s."""
    trajectory = np.asarray(trajectory, dtype=float)
    if trajectory.shape[0] < 2:
        raise ValueError("trajectory needs at least two samples")
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = trajectory.shape[0] - 1
    dt = duration / n
    return np.diff(trajectory, axis=0) / dt
