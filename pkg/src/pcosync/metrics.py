"""Analysis of completed runs: containing arc, synchronization detection,
collective period measurement and per-run summaries.

Phase synchronization is an exact property here: phases are integer ticks
and the containing arc is computed in ticks, so "arc == 0" is an integer
comparison, never a tolerance test. Radians appear only in reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import TWO_PI, TickClock
from .engine import FIRED, RESET_TO_ZERO, SimulationResult
from .topology import ConditionReport


def containing_arc_ticks(phases, ticks_per_period: int) -> int:
    """Length in ticks of the shortest circle arc containing every phase.

    Complement of the largest gap between circularly consecutive phases;
    zero for a single phase or all-equal phases.
    """
    if not phases:
        raise ValueError("containing arc of an empty phase set is undefined")
    pts = sorted(p % ticks_per_period for p in phases)
    max_gap = pts[0] + ticks_per_period - pts[-1]  # wraparound gap
    for a, b in zip(pts, pts[1:]):
        if b - a > max_gap:
            max_gap = b - a
    return ticks_per_period - max_gap


def containing_arc(phases, clock: TickClock) -> float:
    """Containing arc in radians (exact tick arithmetic underneath)."""
    return containing_arc_ticks(phases, clock.ticks_per_period) / clock.ticks_per_period * TWO_PI


def arc_trace(result: SimulationResult) -> list:
    """(tick, arc ticks) per snapshot."""
    tpp = result.clock.ticks_per_period
    return [(s.tick, containing_arc_ticks(s.phases, tpp)) for s in result.snapshots]


def detect_sync(result: SimulationResult) -> int | None:
    """Earliest tick after which the legitimate population is exactly synchronized.

    The tick must see every legitimate oscillator reset to zero together;
    afterwards every snapshot must have a zero containing arc and every
    legitimate firing must happen jointly, at instants spaced exactly one
    period apart. A single-oscillator network is synchronized at its first
    reset to zero by convention.
    """
    legit = result.legit_ids
    n_legit = len(legit)
    legit_set = set(legit)

    resets: dict[int, int] = {}
    fires: dict[int, int] = {}
    for rec in result.records:
        if rec.kind == RESET_TO_ZERO:
            resets[rec.tick] = resets.get(rec.tick, 0) + 1
        elif rec.kind == FIRED and rec.node in legit_set:
            fires[rec.tick] = fires.get(rec.tick, 0) + 1

    if n_legit == 1:
        return min(resets) if resets else None

    candidates = sorted(t for t, c in resets.items() if c == n_legit)
    if not candidates:
        return None
    fire_ticks = sorted(fires)
    tpp = result.clock.ticks_per_period
    for t_sync in candidates:
        ok = True
        for snap in result.snapshots:
            if snap.tick >= t_sync and min(snap.phases) != max(snap.phases):
                ok = False
                break
        if not ok:
            continue
        later = [t for t in fire_ticks if t > t_sync]
        if any(fires[t] != n_legit for t in later):
            continue
        if any(b - a != tpp for a, b in zip(later, later[1:])):
            continue
        return t_sync
    return None


def common_fire_ticks(result: SimulationResult, after: int = -1) -> list[int]:
    """Ticks strictly after `after` at which every legitimate oscillator fired."""
    legit_set = set(result.legit_ids)
    counts: dict[int, int] = {}
    for rec in result.records:
        if rec.kind == FIRED and rec.node in legit_set and rec.tick > after:
            counts[rec.tick] = counts.get(rec.tick, 0) + 1
    return sorted(t for t, c in counts.items() if c == len(legit_set))


def collective_period(result: SimulationResult, after: int | None) -> list[int]:
    """Gaps between consecutive joint firing instants after synchronization.

    ``after`` is the detected synchronization tick; calling this without one
    is an error.
    """
    if after is None:
        raise ValueError("collective_period requires a detected synchronization tick")
    ticks = common_fire_ticks(result, after)
    return [b - a for a, b in zip(ticks, ticks[1:])]


@dataclass
class RunSummary:
    """Digest of one run, serializable to JSON with stable field order."""

    seed: int
    config_digest: str
    mechanism: str
    n: int
    legitimate_ids: list[int]
    attacker_ids: list[int]
    horizon_ticks: int
    conditions: ConditionReport | None
    sync_tick: int | None
    sync_seconds: float | None
    final_arc_rad: float
    collective_periods: list[int]
    periods_exact: bool | None
    initial_phases_ticks: list[int]
    attack_schedules: dict
    arc_trace: list | None = field(default=None)

    def to_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "config_digest": self.config_digest,
            "mechanism": self.mechanism,
            "n": self.n,
            "legitimate_ids": self.legitimate_ids,
            "attacker_ids": self.attacker_ids,
            "horizon_ticks": self.horizon_ticks,
            "conditions": self.conditions.to_dict() if self.conditions else None,
            "sync_tick": self.sync_tick,
            "sync_seconds": _round9(self.sync_seconds),
            "final_arc_rad": _round9(self.final_arc_rad),
            "collective_periods": self.collective_periods,
            "periods_exact": self.periods_exact,
            "initial_phases_ticks": self.initial_phases_ticks,
            "attack_schedules": self.attack_schedules,
        }
        if self.arc_trace is not None:
            out["arc_trace"] = [[t, _round9(a)] for t, a in self.arc_trace]
        return out


def _round9(x: float | None):
    # reports print radians/seconds with 9 significant digits
    return None if x is None else float(f"{x:.9g}")


def summarize_run(
    result: SimulationResult,
    *,
    seed: int,
    config_digest: str,
    mechanism: str,
    conditions: ConditionReport | None,
    initial_phases: dict,
    schedules_jsonable: dict,
    horizon: int,
    include_arc_trace: bool = False,
) -> RunSummary:
    clock = result.clock
    tpp = clock.ticks_per_period
    sync_tick = detect_sync(result)
    if sync_tick is not None:
        periods = collective_period(result, sync_tick)
        periods_exact = all(g == tpp for g in periods) if periods else None
    else:
        # no synchronization: record whatever joint firing rhythm exists
        ticks = common_fire_ticks(result)
        periods = [b - a for a, b in zip(ticks, ticks[1:])]
        periods_exact = None
    trace = None
    if include_arc_trace:
        trace = [(t, a / tpp * TWO_PI) for t, a in arc_trace(result)]
    final_arc = containing_arc(result.final_phases(), clock)
    return RunSummary(
        seed=seed,
        config_digest=config_digest,
        mechanism=mechanism,
        n=len(result.legit_ids) + len(result.attacker_ids),
        legitimate_ids=list(result.legit_ids),
        attacker_ids=list(result.attacker_ids),
        horizon_ticks=horizon,
        conditions=conditions,
        sync_tick=sync_tick,
        sync_seconds=None if sync_tick is None else clock.ticks_to_seconds(sync_tick),
        final_arc_rad=final_arc,
        collective_periods=periods,
        periods_exact=periods_exact,
        initial_phases_ticks=[initial_phases[i] for i in result.legit_ids],
        attack_schedules=schedules_jsonable,
        arc_trace=trace,
    )
