"""Mission scoring.

Total points decompose into a counting term, a time term, a distance
term, and a collision penalty:

    p = p_f + p_t + p_d - p_c

    p_f = 50 * (1 - 4*|c_r - c_t| / max(c_t, 1))
    p_t = 25 * exp(1 - t_m / t_b)
    p_d = 25 * exp(2 * (1 - d_m / d_b))
    p_c = 25 * k

A perfectly counted mission flown in the reference time ``t_b`` over the
reference distance ``d_b`` with no collisions scores exactly 100.  No
component is clamped: slow, long, or badly miscounted flights can push
the total negative, and raw values are reported as-is.  The ``max(c_t,
1)`` denominator keeps zero-fruit missions well-defined: counting zero
correctly earns the full 50 while any over-report is penalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ScoreInputs:
    """Everything the metric consumes, plus the reference constants."""

    c_r: int            # reported fruit count
    c_t: int            # true fruit count
    t_m: float          # mission time, seconds
    d_m: float          # distance flown, meters
    k: int              # collision events
    t_b: float = 100.0  # reference time, seconds
    d_b: float = 150.0  # reference distance, meters

    def __post_init__(self) -> None:
        if self.c_t < 0:
            raise ValueError("true count must be nonnegative")
        if self.t_m <= 0:
            raise ValueError("mission time must be positive")
        if self.d_m < 0:
            raise ValueError("distance must be nonnegative")
        if self.k < 0:
            raise ValueError("collision count must be nonnegative")
        if self.t_b <= 0 or self.d_b <= 0:
            raise ValueError("reference constants must be positive")


@dataclass(frozen=True)
class ScoreReport:
    p_f: float
    p_t: float
    p_d: float
    p_c: float
    p: float

    def __post_init__(self) -> None:
        expected = self.p_f + self.p_t + self.p_d - self.p_c
        if abs(self.p - expected) > 1e-9:
            raise ValueError("total does not match its components")


def compute_score(inputs: ScoreInputs) -> ScoreReport:
    """Evaluate the scoring formula on one mission's results."""
    p_f = 50.0 * (1.0 - 4.0 * abs(inputs.c_r - inputs.c_t)
                  / max(inputs.c_t, 1))
    p_t = 25.0 * math.exp(1.0 - inputs.t_m / inputs.t_b)
    p_d = 25.0 * math.exp(2.0 * (1.0 - inputs.d_m / inputs.d_b))
    p_c = 25.0 * inputs.k
    return ScoreReport(p_f=p_f, p_t=p_t, p_d=p_d, p_c=p_c,
                       p=p_f + p_t + p_d - p_c)
