"""Per-oscillator pulse-handling rules.

Three interchangeable behaviors plug into the engine:

* ``conventional`` — classic phase-response coupling: every received pulse
  moves the phase by ``l * F(phase)`` immediately, firing on reaching the
  top of the cycle and resetting to zero.
* ``quorum_n`` — counting rules with the total network size known: firing
  is suppressed within one channel separation of the previous fire and
  until a full period has elapsed since start; the reset target (zero vs
  half cycle) and the pulse response are gated by pulse-count quorums
  derived from the network size and the node's own degree.
* ``quorum_degree`` — the same rule shape with all quorums derived from the
  node's own degree only, for fully decentralized deployments.

The quorum rules respond to a pulse only while the phase is in the upper
half of the cycle, and only when enough earlier pulses arrived either in
the trailing channel-separation window or in the trailing half period (the
latter disabled for a full period after a reset to zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import TWO_PI, TickClock
from .engine import OscillatorState, receive_count

KIND_CONVENTIONAL = "conventional"
KIND_QUORUM_N = "quorum_n"
KIND_QUORUM_DEGREE = "quorum_degree"
MECHANISM_KINDS = (KIND_CONVENTIONAL, KIND_QUORUM_N, KIND_QUORUM_DEGREE)

RESET_ZERO = "zero"
RESET_PI = "pi"


@dataclass(frozen=True)
class TopAction:
    """Decision taken when the phase reaches the top of the cycle."""

    fire: bool
    reset_to: str  # RESET_ZERO or RESET_PI


@dataclass(frozen=True)
class PulseAction:
    """Effect of one received pulse: ignore, shift to the cycle top, or jump."""

    kind: str  # "ignore" | "shift" | "jump"
    jump_to: int = -1


IGNORE = PulseAction("ignore")
SHIFT_TO_2PI = PulseAction("shift")


def jump_to(phase_ticks: int) -> PulseAction:
    return PulseAction("jump", phase_ticks)


@dataclass(frozen=True)
class MechanismConfig:
    """Everything a single oscillator needs to make its decisions.

    ``coupling`` applies to the conventional rule only; ``n_total`` only to
    quorum_n; ``own_degree`` to both quorum rules. Values are injected at
    construction — oscillators never read global state at runtime.
    """

    kind: str
    clock: TickClock
    coupling: float | None = None
    n_total: int | None = None
    own_degree: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in MECHANISM_KINDS:
            raise ValueError(f"unknown mechanism kind {self.kind!r}")
        if self.kind == KIND_CONVENTIONAL:
            if self.coupling is None or not 0.0 < self.coupling <= 1.0:
                raise ValueError("conventional mechanism needs coupling in (0, 1]")
        else:
            if self.own_degree is None or self.own_degree < 0:
                raise ValueError(f"{self.kind} needs a nonnegative own_degree")
            if self.kind == KIND_QUORUM_N and (self.n_total is None or self.n_total < 1):
                raise ValueError("quorum_n needs the total oscillator count")


def prf(phase: float) -> float:
    """Phase response curve: -phase on [0, pi], 2*pi - phase on (pi, 2*pi]."""
    if not 0.0 <= phase <= TWO_PI:
        raise ValueError(f"phase {phase!r} outside [0, 2*pi]")
    if phase <= math.pi:
        return -phase
    return TWO_PI - phase


def apply_conventional_jump(phase: int, coupling: float, ticks_per_period: int) -> int:
    """New phase in ticks after one conventionally-coupled pulse.

    Works directly in ticks (the response curve is linear, so the tick and
    radian computations agree up to the final nearest-tick rounding); the
    result is clamped to [0, ticks_per_period] and a result equal to
    ticks_per_period means the oscillator fires immediately.
    """
    if not 0.0 < coupling <= 1.0:
        raise ValueError("coupling must lie in (0, 1]")
    half = ticks_per_period // 2
    response = -phase if phase <= half else ticks_per_period - phase
    new_phase = round(phase + coupling * response)
    return min(max(new_phase, 0), ticks_per_period)


class ConventionalPrf:
    """Jump on every pulse; fire and reset to zero whenever the top is reached."""

    def __init__(self, config: MechanismConfig):
        self.coupling = config.coupling
        self.ticks_per_period = config.clock.ticks_per_period

    def on_reach_top(self, state: OscillatorState, now: int) -> TopAction:
        return TopAction(fire=True, reset_to=RESET_ZERO)

    def on_pulse(self, state: OscillatorState, now: int, current_seq: int) -> PulseAction:
        return jump_to(apply_conventional_jump(state.phase, self.coupling, self.ticks_per_period))


class QuorumMechanism:
    """Shared counting rules for both quorum mechanism kinds.

    ``reset_over`` is the strict lower bound for resetting to zero (count
    must exceed it); ``response_quorum`` is the minimum number of pulses
    that must precede the current one for a shift to the cycle top.
    """

    def __init__(self, kind: str, reset_over: int, response_quorum: int, clock: TickClock):
        self.kind = kind
        self.reset_over = reset_over
        self.response_quorum = response_quorum
        self.eps = clock.epsilon_ticks
        self.period = clock.ticks_per_period
        self.half = clock.ticks_per_period // 2

    def on_reach_top(self, state: OscillatorState, now: int) -> TopAction:
        fire = (
            state.last_fire_tick is None or state.last_fire_tick <= now - self.eps
        ) and now >= state.started_at_tick + self.period
        zero = receive_count(state, now - self.eps, now) > self.reset_over
        return TopAction(fire=fire, reset_to=RESET_ZERO if zero else RESET_PI)

    def on_pulse(self, state: OscillatorState, now: int, current_seq: int) -> PulseAction:
        if state.phase < self.half:
            return IGNORE
        quorum = self.response_quorum
        if receive_count(state, now - self.eps, now, before_seq=current_seq) >= quorum:
            return SHIFT_TO_2PI
        reset = state.last_reset_to_zero_tick
        if reset is not None and now - self.period < reset < now:
            return IGNORE  # recent reset to zero disables the half-period rule
        if receive_count(state, now - self.half, now, lo_closed=True, before_seq=current_seq) >= quorum:
            return SHIFT_TO_2PI
        return IGNORE


def build_mechanism(config: MechanismConfig):
    """Instantiate the decision object for one oscillator."""
    if config.kind == KIND_CONVENTIONAL:
        return ConventionalPrf(config)
    if config.kind == KIND_QUORUM_N:
        # reset to zero on more than floor(N/3) pulses; respond to a pulse
        # after at least own_degree - floor(2N/3) - 1 earlier ones
        return QuorumMechanism(
            config.kind,
            reset_over=config.n_total // 3,
            response_quorum=config.own_degree - (2 * config.n_total) // 3 - 1,
            clock=config.clock,
        )
    # quorum_degree: reset on at least floor(d/3) pulses, i.e. more than
    # floor(d/3) - 1; respond after at least floor(d/6) - 1 earlier ones
    return QuorumMechanism(
        config.kind,
        reset_over=config.own_degree // 3 - 1,
        response_quorum=config.own_degree // 6 - 1,
        clock=config.clock,
    )
