"""State-carry policy: reset probability decays from p_start to p_end on a
cosine over the first decay_steps updates, then stays at p_end."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfigError


@dataclass(frozen=True)
class CarrySchedule:
    p_start: float = 1.0
    p_end: float = 0.01
    decay_steps: int = 40000

    def validate(self) -> "CarrySchedule":
        if not (self.p_start >= self.p_end >= 0.0):
            raise InvalidConfigError(
                f"need p_start >= p_end >= 0, got {self.p_start}, {self.p_end}")
        if self.decay_steps < 1:
            raise InvalidConfigError(f"decay_steps must be >= 1, got {self.decay_steps}")
        return self


def carry_prob(step: int, sched: CarrySchedule) -> float:
    """Reset probability at `step`."""
    progress = min(max(step, 0) / sched.decay_steps, 1.0)
    w = 0.5 * (1.0 + math.cos(math.pi * progress))
    return sched.p_end + (sched.p_start - sched.p_end) * w


def carry_policy(step: int, sched: CarrySchedule,
                 rng: np.random.Generator) -> bool:
    """Draw whether to reset the carried state before this update."""
    return bool(rng.random() < carry_prob(step, sched))
