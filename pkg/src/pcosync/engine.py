"""Deterministic event-driven simulation kernel.

Pulses propagate with zero delay, so everything interesting happens inside
single time instants: a firing can shift receivers to the top of the cycle,
those fire in turn, and the chain must be resolved to a fixpoint before time
advances. The kernel fixes a total order over all same-instant work
(attacker pulses, then phase wraps, by node index; deliveries in global
emission order) so a run is a pure function of its inputs.

Mechanism objects plugged into the kernel expose two pure decision
functions::

    on_reach_top(state, now) -> TopAction(fire: bool, reset_to: "zero"|"pi")
    on_pulse(state, now, current_seq) -> action with .kind in
        {"ignore", "shift", "jump"} (jump carries .jump_to ticks)

The kernel consults ``.fire`` the moment an oscillator's phase reaches the
top of the cycle (so fire suppression applies mid-cascade) and ``.reset_to``
once the instant has settled, when the full set of same-instant pulses is in
the receive log. Both calls see the same pure function, only different
state.
"""

from __future__ import annotations

import heapq
from collections import deque, namedtuple
from dataclasses import dataclass, field

from .core import TickClock
from .topology import Topology

# event-log record kinds
FIRED = "fired"
RECEIVED = "received"
SHIFTED_TO_2PI = "shifted_to_2pi"
RESET_TO_ZERO = "reset_to_zero"
RESET_TO_PI = "reset_to_pi"

# queue priority: attacker pulses are popped before phase wraps at equal ticks
_PRIO_ATTACK = 0
_PRIO_WRAP = 1

LogRecord = namedtuple("LogRecord", "tick kind node sender seq")
LogRecord.__doc__ = (
    "One event-log entry. sender/seq are populated only for RECEIVED records "
    "(node is then the receiver); every pulse delivery carries a globally "
    "unique, monotonically increasing seq."
)

PhaseSnapshot = namedtuple("PhaseSnapshot", "tick phases")
PhaseSnapshot.__doc__ = (
    "Post-instant phases (ticks) of the legitimate oscillators, aligned with "
    "SimulationResult.legit_ids."
)


class EngineError(Exception):
    """Simulation kernel invariant violation (e.g. runaway cascade)."""


@dataclass
class OscillatorState:
    """Mutable per-oscillator state the mechanisms decide on.

    ``phase`` is the phase in ticks at reference time ``phase_tick``; between
    events the phase advances one tick per tick. ``receive_log`` holds
    (tick, seq) pairs for processed pulses, pruned to the trailing half
    period (the widest counting window any rule uses); the scalar
    ``last_reset_to_zero_tick`` survives pruning because one rule looks a
    full period back.
    """

    id: int
    phase: int
    phase_tick: int = 0
    receive_log: deque = field(default_factory=deque)
    last_fire_tick: int | None = None
    last_reset_to_zero_tick: int | None = None
    started_at_tick: int = 0
    wrap_gen: int = 0  # bumps on every reschedule; stale queue entries are skipped

    def phase_at(self, now: int) -> int:
        return self.phase + (now - self.phase_tick)


def receive_count(
    state: OscillatorState,
    lo: int,
    hi: int,
    *,
    lo_closed: bool = False,
    hi_closed: bool = True,
    before_seq: int | None = None,
) -> int:
    """Count received pulses inside a tick window with explicit endpoint openness.

    ``before_seq`` excludes the pulse currently being processed and any
    later same-instant pulses, i.e. it restricts the count to pulses received
    strictly before the current one.
    """
    n = 0
    for t, s in reversed(state.receive_log):
        if t > hi or (t == hi and not hi_closed):
            continue
        if t < lo or (t == lo and not lo_closed):
            break
        if before_seq is not None and s >= before_seq:
            continue
        n += 1
    return n


def next_wrap_tick(state: OscillatorState, now: int, ticks_per_period: int) -> int:
    """Tick at which the phase will reach the top of the cycle by free evolution."""
    phase = state.phase_at(now)
    if phase >= ticks_per_period:
        raise ValueError("phase already at the top of the cycle")
    return now + (ticks_per_period - phase)


@dataclass
class SimulationResult:
    clock: TickClock
    legit_ids: tuple[int, ...]
    attacker_ids: tuple[int, ...]
    records: list
    snapshots: list
    states: dict

    def final_phases(self) -> tuple[int, ...]:
        return self.snapshots[-1].phases


class Simulation:
    """One seeded scenario wired up and ready to run.

    ``mechanisms`` maps every legitimate oscillator id to its decision
    object; ``schedules`` maps attacker ids to sorted emission tick lists
    (already validated by the adversary module). ``initial_phases`` maps
    legitimate ids to ticks in [0, ticks_per_period]; a start value at the
    very top of the cycle is resolved by the engine at tick 0.
    """

    def __init__(
        self,
        clock: TickClock,
        topology: Topology,
        mechanisms: dict,
        initial_phases: dict,
        horizon: int,
        attacker_ids=(),
        schedules: dict | None = None,
    ):
        self.clock = clock
        self.topology = topology
        self.horizon = int(horizon)
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        self.attacker_ids = tuple(sorted(set(attacker_ids)))
        attacker_set = set(self.attacker_ids)
        if any(not 0 <= a < topology.n for a in attacker_set):
            raise ValueError("attacker id outside the topology")
        self.legit_ids = tuple(i for i in range(topology.n) if i not in attacker_set)
        if not self.legit_ids:
            raise ValueError("network has no legitimate oscillators")
        if set(mechanisms) != set(self.legit_ids):
            raise ValueError("mechanisms must cover exactly the legitimate oscillators")
        if set(initial_phases) != set(self.legit_ids):
            raise ValueError("initial phases must cover exactly the legitimate oscillators")
        tpp = clock.ticks_per_period
        for i, p in initial_phases.items():
            if not 0 <= p <= tpp:
                raise ValueError(f"initial phase of oscillator {i} outside [0, ticks_per_period]")
        self.schedules = {a: tuple(v) for a, v in (schedules or {}).items()}
        if any(a not in attacker_set for a in self.schedules):
            raise ValueError("schedule present for a non-attacker id")
        self.mechanisms = dict(mechanisms)
        self.initial_phases = dict(initial_phases)
        self._attacker_set = attacker_set

    def run(self) -> SimulationResult:
        tpp = self.clock.ticks_per_period
        states = {
            i: OscillatorState(id=i, phase=self.initial_phases[i], phase_tick=0)
            for i in self.legit_ids
        }
        queue: list[tuple[int, int, int, int]] = []  # (tick, prio, node, gen)
        for i in self.legit_ids:
            queue.append((tpp - states[i].phase, _PRIO_WRAP, i, 0))
        for a, ticks in self.schedules.items():
            for t in ticks:
                if 0 <= t <= self.horizon:
                    queue.append((t, _PRIO_ATTACK, a, 0))
        heapq.heapify(queue)

        records: list = []
        snapshots: list = []
        self._states = states
        self._queue = queue
        self._records = records
        self._seq = 0
        self._cascade_cap = self.topology.n * self.topology.n

        # snapshot at a fixed cadence, at every instant with activity, and at
        # the horizon, so traces capture cascade discontinuities
        cadence = max(1, tpp // 100)
        snap_ticks = list(range(0, self.horizon + 1, cadence))
        if snap_ticks[-1] != self.horizon:
            snap_ticks.append(self.horizon)
        si = 0
        while si < len(snap_ticks) or (queue and queue[0][0] <= self.horizon):
            next_event = queue[0][0] if queue and queue[0][0] <= self.horizon else None
            next_snap = snap_ticks[si] if si < len(snap_ticks) else None
            if next_event is not None and (next_snap is None or next_event <= next_snap):
                self._resolve_instant(next_event)
                snapshots.append(self._snapshot(next_event))
                if next_snap == next_event:
                    si += 1
            else:
                snapshots.append(self._snapshot(next_snap))
                si += 1

        return SimulationResult(
            clock=self.clock,
            legit_ids=self.legit_ids,
            attacker_ids=self.attacker_ids,
            records=records,
            snapshots=snapshots,
            states=states,
        )

    # -- instant resolution ------------------------------------------------

    def _resolve_instant(self, t: int) -> None:
        """Drain every event scheduled at tick t and cascade to a fixpoint."""
        queue = self._queue
        states = self._states
        records = self._records
        adjacency = self.topology.adjacency
        tpp = self.clock.ticks_per_period
        attacker_set = self._attacker_set
        pending: deque = deque()
        at_top: set[int] = set()

        def emit(sender: int) -> None:
            for r in adjacency[sender]:
                self._seq += 1
                records.append(LogRecord(t, RECEIVED, r, sender, self._seq))
                pending.append((r, self._seq))

        def reach_top(i: int) -> None:
            st = states[i]
            st.phase = tpp
            st.phase_tick = t
            st.wrap_gen += 1  # any scheduled wrap is now stale
            if self.mechanisms[i].on_reach_top(st, t).fire:
                records.append(LogRecord(t, FIRED, i, None, None))
                st.last_fire_tick = t
                emit(i)
            at_top.add(i)

        # 1) pop everything scheduled at t: attacker pulses first, then wraps
        while queue and queue[0][0] == t:
            _, prio, node, gen = heapq.heappop(queue)
            if prio == _PRIO_ATTACK:
                records.append(LogRecord(t, FIRED, node, None, None))
                emit(node)
            elif gen == states[node].wrap_gen:
                st = states[node]
                if st.phase_at(t) != tpp:
                    raise EngineError(f"wrap event for {node} at {t} does not land on the cycle top")
                reach_top(node)

        # 2) process deliveries in emission order; shifts re-enter reach_top
        steps = 0
        half = tpp // 2
        while pending:
            r, seq = pending.popleft()
            steps += 1
            if steps > self._cascade_cap:
                raise EngineError(
                    f"same-instant cascade at tick {t} exceeded {self._cascade_cap} deliveries; "
                    "mechanism rules are not suppressing repeated fires"
                )
            if r in attacker_set:
                continue  # compromised nodes ignore everything they receive
            st = states[r]
            log = st.receive_log
            log.append((t, seq))
            cutoff = t - half
            while log[0][0] < cutoff:
                log.popleft()
            if r in at_top:
                continue  # already at the cycle top; the pulse still counts
            st.phase = st.phase_at(t)
            st.phase_tick = t
            action = self.mechanisms[r].on_pulse(st, t, seq)
            kind = action.kind
            if kind == "ignore":
                continue
            if kind == "shift":
                records.append(LogRecord(t, SHIFTED_TO_2PI, r, None, None))
                reach_top(r)
            elif kind == "jump":
                new_phase = action.jump_to
                if new_phase == st.phase:
                    continue
                st.phase = new_phase
                if new_phase == tpp:
                    reach_top(r)
                else:
                    st.wrap_gen += 1
                    heapq.heappush(queue, (t + tpp - new_phase, _PRIO_WRAP, r, st.wrap_gen))
            else:
                raise EngineError(f"mechanism returned unknown pulse action {kind!r}")

        # 3) instant settled: oscillators parked at the top pick their reset
        for i in sorted(at_top):
            st = states[i]
            target = self.mechanisms[i].on_reach_top(st, t).reset_to
            if target == "zero":
                st.phase = 0
                st.last_reset_to_zero_tick = t
                records.append(LogRecord(t, RESET_TO_ZERO, i, None, None))
            else:
                st.phase = half
                records.append(LogRecord(t, RESET_TO_PI, i, None, None))
            st.phase_tick = t
            st.wrap_gen += 1
            heapq.heappush(queue, (t + tpp - st.phase, _PRIO_WRAP, i, st.wrap_gen))

    def _snapshot(self, t: int):
        states = self._states
        return PhaseSnapshot(t, tuple(states[i].phase_at(t) for i in self.legit_ids))
