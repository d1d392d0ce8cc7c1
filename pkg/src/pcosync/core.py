"""Integer time base shared by the whole simulator.

All simulation time and all oscillator phases are integer ticks. One
free-running oscillation period (2*pi seconds of phase at unit angular
speed) spans ``ticks_per_period`` ticks, so simultaneity, interval
endpoints and phase equality are exact integer comparisons; floats appear
only at the reporting boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TickClock:
    """Tick/radian/second conversions for one oscillation period.

    ``ticks_per_period`` must be even so that the half-cycle reset target
    (pi rad) is tick-exact. ``epsilon_ticks`` is the minimum separation a
    channel allows between two consecutive pulses; it must be positive and
    strictly below half a period for the pulse-train model to make sense.
    """

    ticks_per_period: int = 1_000_000
    epsilon_ticks: int = 10_000

    def __post_init__(self) -> None:
        tpp = self.ticks_per_period
        if not isinstance(tpp, int) or tpp <= 0 or tpp % 2 != 0:
            raise ValueError("ticks_per_period must be a positive even integer")
        eps = self.epsilon_ticks
        if not isinstance(eps, int) or eps <= 0 or eps >= tpp // 2:
            raise ValueError("epsilon_ticks must satisfy 0 < epsilon < ticks_per_period/2")

    @property
    def half_period(self) -> int:
        return self.ticks_per_period // 2

    def rad_to_ticks(self, angle: float) -> int:
        """Nearest tick for an angle in [0, 2*pi].

        2*pi maps exactly to ticks_per_period and pi exactly to half of it;
        the mapping is monotone nondecreasing.
        """
        if not 0.0 <= angle <= TWO_PI:
            raise ValueError(f"angle {angle!r} outside [0, 2*pi]")
        return round(angle / TWO_PI * self.ticks_per_period)

    def ticks_to_rad(self, ticks: int) -> float:
        if not 0 <= ticks <= self.ticks_per_period:
            raise ValueError(f"ticks {ticks!r} outside [0, ticks_per_period]")
        return ticks / self.ticks_per_period * TWO_PI

    def ticks_to_seconds(self, ticks: int) -> float:
        # Unit angular speed: one period lasts 2*pi seconds, so the scale
        # factor is the same as for radians.
        return ticks / self.ticks_per_period * TWO_PI


def floor_split_holds(x: int, y: int, q: int) -> bool:
    """Check the two floor-division inequalities the quorum thresholds rest on.

    For positive integers with x > y:

        floor(y*q/x) >= y * floor(q/x)
        floor(y*q/x) + floor((x-y)*q/x) + 1 >= q

    Both are identities (splitting q through the floor loses less than one
    unit per part); this function exists as an exhaustive self-test hook, so
    a False return means an implementation bug somewhere.
    """
    if y < 1 or q < 1 or x <= y:
        raise ValueError("require x > y >= 1 and q >= 1")
    lead = y * q // x
    return lead >= y * (q // x) and lead + (x - y) * q // x + 1 >= q
