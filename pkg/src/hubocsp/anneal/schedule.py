from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling from ``t_max`` to ``t_min`` over ``n_steps`` sweeps."""

    t_max: float
    t_min: float
    n_steps: int

    def __post_init__(self):
        if not (self.t_max >= self.t_min > 0):
            raise ValueError(f"need t_max >= t_min > 0, got {self.t_max}, {self.t_min}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")

    def temperatures(self) -> np.ndarray:
        """Temperatures of sweeps ``0 .. n_steps - 1``."""
        return np.array([temperature(self, x) for x in range(self.n_steps)])


def temperature(schedule: AnnealSchedule, x: float) -> float:
    """``t_max * (t_min / t_max) ** (x / n_steps)``."""
    if not 0 <= x <= schedule.n_steps:
        raise ValueError(f"step {x} outside [0, {schedule.n_steps}]")
    if x == schedule.n_steps:
        return float(schedule.t_min)
    return float(schedule.t_max * (schedule.t_min / schedule.t_max) ** (x / schedule.n_steps))
