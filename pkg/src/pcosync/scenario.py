"""Scenario configuration and run orchestration.

A scenario is a JSON document describing the clock, the topology, the
mechanism, the attacker set with its traffic spec, the initial phases, the
horizon and the seed. Parsing produces a validated ``ScenarioConfig``; its
canonical form (defaults resolved, keys ordered) feeds both the config
digest and the sweep workers, so a run is reproducible from its digest
inputs alone.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from random import Random
from statistics import median_low

from . import adversary, mechanisms, topology as topo_mod
from .core import TWO_PI, TickClock
from .engine import Simulation, SimulationResult
from .metrics import RunSummary, summarize_run
from .topology import ConditionReport, Topology

DEFAULT_TICKS_PER_PERIOD = 1_000_000
DEFAULT_EPSILON_TICKS = 10_000
DEFAULT_HORIZON_PERIODS = 20

PHASE_SEED_SCOPE = "phases"


class ConfigError(ValueError):
    """Malformed or inconsistent scenario/sweep configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    clock: TickClock
    topology_desc: dict
    mechanism_kind: str
    coupling: float | None
    n_known: int | None
    attacker_ids: tuple[int, ...]
    attack_spec: adversary.AttackSpec | None
    initial_phases_rad: tuple[float, ...] | None  # None means random draw
    phase_seed_scope: str
    horizon_ticks: int
    seed: int
    arc_trace_in_summary: bool = False


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _check_keys(section: dict, allowed: set, label: str) -> None:
    unknown = set(section) - allowed
    _require(not unknown, f"unknown {label} fields: {sorted(unknown)}")


def _normalize_topology(desc: dict) -> dict:
    """Canonical topology description (fixed keys, normalized value types)."""
    if desc.get("kind") == "circle":
        _check_keys(desc, {"kind", "n", "diameter", "range"}, "topology")
        return {
            "kind": "circle",
            "n": int(desc["n"]),
            "diameter": float(desc["diameter"]),
            "range": float(desc["range"]),
        }
    if desc.get("kind") == "explicit":
        _check_keys(desc, {"kind", "adjacency"}, "topology")
        return {
            "kind": "explicit",
            "adjacency": [sorted(int(j) for j in row) for row in desc["adjacency"]],
        }
    raise ConfigError(f"unknown topology kind {desc.get('kind')!r}")


def parse_scenario(data: dict) -> ScenarioConfig:
    """Validate a scenario mapping (parsed JSON) into a ScenarioConfig."""
    _require(isinstance(data, dict), "scenario config must be a mapping")
    unknown = set(data) - {
        "clock", "topology", "mechanism", "attackers", "initial_phases",
        "horizon_ticks", "seed", "output",
    }
    _require(not unknown, f"unknown scenario fields: {sorted(unknown)}")

    clock_data = data.get("clock", {})
    _check_keys(clock_data, {"ticks_per_period", "epsilon_ticks"}, "clock")
    try:
        clock = TickClock(
            ticks_per_period=int(clock_data.get("ticks_per_period", DEFAULT_TICKS_PER_PERIOD)),
            epsilon_ticks=int(clock_data.get("epsilon_ticks", DEFAULT_EPSILON_TICKS)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad clock: {exc}") from None

    _require("topology" in data and isinstance(data["topology"], dict),
             "scenario needs a topology section")
    topo_desc = _normalize_topology(data["topology"])
    try:
        topo = topo_mod.load_topology(topo_desc)
    except ValueError as exc:
        raise ConfigError(f"bad topology: {exc}") from None

    mech = data.get("mechanism")
    _require(isinstance(mech, dict) and "kind" in mech, "scenario needs mechanism.kind")
    _check_keys(mech, {"kind", "coupling", "n_known"}, "mechanism")
    kind = mech["kind"]
    _require(kind in mechanisms.MECHANISM_KINDS, f"unknown mechanism kind {kind!r}")
    coupling = mech.get("coupling")
    n_known = mech.get("n_known")
    if kind == mechanisms.KIND_CONVENTIONAL:
        _require(coupling is not None, "conventional mechanism needs 'coupling'")
        coupling = float(coupling)
        _require(0.0 < coupling <= 1.0, "coupling must lie in (0, 1]")
    else:
        _require(coupling is None, f"{kind} does not take 'coupling'")
    if kind == mechanisms.KIND_QUORUM_N:
        _require(n_known is not None, "quorum_n needs 'n_known' (total oscillator count)")
        n_known = int(n_known)
        _require(n_known >= 1, "n_known must be positive")
    else:
        _require(n_known is None, f"{kind} does not take 'n_known'")

    attackers = data.get("attackers") or {}
    _check_keys(attackers, {"ids", "attack"}, "attackers")
    ids = tuple(sorted(int(i) for i in attackers.get("ids", ())))
    _require(len(set(ids)) == len(ids), "duplicate attacker ids")
    _require(all(0 <= i < topo.n for i in ids), "attacker id outside the topology")
    _require(len(ids) < topo.n, "at least one oscillator must stay legitimate")
    attack_spec = None
    if ids:
        spec_data = attackers.get("attack")
        _require(isinstance(spec_data, dict) and "kind" in spec_data,
                 "attackers present but attackers.attack.kind missing")
        attack_spec = _parse_attack_spec(spec_data, ids)
    else:
        _require("attack" not in attackers, "attack spec given without attacker ids")

    n_legit = topo.n - len(ids)
    phases_data = data.get("initial_phases", {"random_uniform": PHASE_SEED_SCOPE})
    phases_rad: tuple[float, ...] | None
    scope = PHASE_SEED_SCOPE
    if isinstance(phases_data, dict) and "random_uniform" in phases_data:
        scope = str(phases_data["random_uniform"])
        phases_rad = None
    elif isinstance(phases_data, dict) and "radians" in phases_data:
        raw = phases_data["radians"]
        _require(isinstance(raw, (list, tuple)), "initial_phases.radians must be a list")
        _require(len(raw) == n_legit,
                 f"initial_phases.radians must list {n_legit} values (one per legitimate oscillator)")
        phases_rad = tuple(float(x) for x in raw)
        _require(all(0.0 <= x <= TWO_PI for x in phases_rad),
                 "initial phases must lie in [0, 2*pi]")
    else:
        raise ConfigError("initial_phases must be {'random_uniform': scope} or {'radians': [...]}")

    horizon = int(data.get("horizon_ticks", DEFAULT_HORIZON_PERIODS * clock.ticks_per_period))
    _require(horizon > 0, "horizon_ticks must be positive")
    seed = int(data.get("seed", 0))
    _require(seed >= 0, "seed must be a nonnegative integer")
    output = data.get("output") or {}
    _check_keys(output, {"arc_trace_in_summary"}, "output")

    return ScenarioConfig(
        clock=clock,
        topology_desc=topo_desc,
        mechanism_kind=kind,
        coupling=coupling,
        n_known=n_known,
        attacker_ids=ids,
        attack_spec=attack_spec,
        initial_phases_rad=phases_rad,
        phase_seed_scope=scope,
        horizon_ticks=horizon,
        seed=seed,
        arc_trace_in_summary=bool(output.get("arc_trace_in_summary", False)),
    )


def _parse_attack_spec(data: dict, ids: tuple[int, ...]) -> adversary.AttackSpec:
    kind = data["kind"]
    try:
        if kind == "scripted":
            ticks = data.get("ticks")
            _require(isinstance(ticks, dict), "scripted attack needs a 'ticks' mapping")
            scripted = tuple(sorted(
                (int(a), tuple(int(t) for t in ts)) for a, ts in ticks.items()
            ))
            _require(set(a for a, _ in scripted) <= set(ids),
                     "scripted ticks reference a non-attacker id")
            return adversary.AttackSpec(kind="scripted", attacker_ids=ids, scripted=scripted)
        common = dict(
            attacker_ids=ids,
            horizon_ticks=int(data["horizon_ticks"]) if "horizon_ticks" in data else None,
            seed_scope=str(data.get("seed_scope", "attack")),
        )
        if kind == "random_budget":
            return adversary.AttackSpec(kind=kind, total_pulses=int(data["total_pulses"]), **common)
        if kind == "periodic":
            return adversary.AttackSpec(kind=kind, period_ticks=int(data["period_ticks"]), **common)
        if kind == "stealthy":
            return adversary.AttackSpec(kind=kind, **common)
    except KeyError as exc:
        raise ConfigError(f"attack spec missing field {exc}") from None
    except adversary.ScheduleError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown attack kind {kind!r}")


def canonical_dict(config: ScenarioConfig) -> dict:
    """Fully resolved scenario mapping; parsing it again is the identity."""
    out: dict = {
        "clock": {
            "ticks_per_period": config.clock.ticks_per_period,
            "epsilon_ticks": config.clock.epsilon_ticks,
        },
        "topology": config.topology_desc,
        "mechanism": {"kind": config.mechanism_kind},
        "horizon_ticks": config.horizon_ticks,
        "seed": config.seed,
    }
    if config.coupling is not None:
        out["mechanism"]["coupling"] = config.coupling
    if config.n_known is not None:
        out["mechanism"]["n_known"] = config.n_known
    if config.attacker_ids:
        spec = config.attack_spec
        attack: dict = {"kind": spec.kind}
        if spec.kind == "scripted":
            attack["ticks"] = {str(a): list(ts) for a, ts in spec.scripted}
        else:
            attack["horizon_ticks"] = spec.horizon_ticks
            attack["seed_scope"] = spec.seed_scope
            if spec.kind == "random_budget":
                attack["total_pulses"] = spec.total_pulses
            if spec.kind == "periodic":
                attack["period_ticks"] = spec.period_ticks
        out["attackers"] = {"ids": list(config.attacker_ids), "attack": attack}
    if config.initial_phases_rad is None:
        out["initial_phases"] = {"random_uniform": config.phase_seed_scope}
    else:
        out["initial_phases"] = {"radians": list(config.initial_phases_rad)}
    if config.arc_trace_in_summary:
        out["output"] = {"arc_trace_in_summary": True}
    return out


def config_digest(config: ScenarioConfig) -> str:
    blob = json.dumps(canonical_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def scoped_seed(seed: int, scope: str) -> int:
    """Independent 64-bit RNG seed for one named purpose of a run."""
    digest = hashlib.sha256(f"{seed}:{scope}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def draw_initial_phases(config: ScenarioConfig, legit_ids) -> dict:
    """Initial phase ticks per legitimate oscillator (explicit or seeded draw)."""
    tpp = config.clock.ticks_per_period
    if config.initial_phases_rad is not None:
        return {
            i: config.clock.rad_to_ticks(x)
            for i, x in zip(legit_ids, config.initial_phases_rad)
        }
    rng = Random(scoped_seed(config.seed, config.phase_seed_scope))
    return {i: round(rng.random() * tpp) for i in legit_ids}


@dataclass
class RunArtifacts:
    config: ScenarioConfig
    topology: Topology
    conditions: ConditionReport | None
    result: SimulationResult
    summary: RunSummary


def conditions_for(config: ScenarioConfig, topo: Topology) -> ConditionReport | None:
    if config.mechanism_kind == mechanisms.KIND_CONVENTIONAL:
        return None
    return topo_mod.check_sync_conditions(topo, config.mechanism_kind, len(config.attacker_ids))


def build_simulation(config: ScenarioConfig):
    """Materialize topology, mechanisms, schedules and phases for one run."""
    topo = topo_mod.load_topology(config.topology_desc)
    attacker_set = set(config.attacker_ids)
    legit_ids = [i for i in range(topo.n) if i not in attacker_set]
    mechs = {}
    for i in legit_ids:
        mc = mechanisms.MechanismConfig(
            kind=config.mechanism_kind,
            clock=config.clock,
            coupling=config.coupling,
            n_total=config.n_known,
            own_degree=topo.degree[i],
        )
        mechs[i] = mechanisms.build_mechanism(mc)
    phases = draw_initial_phases(config, legit_ids)
    schedules = []
    if config.attack_spec is not None:
        rng = Random(scoped_seed(config.seed, config.attack_spec.seed_scope))
        schedules = adversary.generate(config.attack_spec, config.clock, rng)
    sim = Simulation(
        clock=config.clock,
        topology=topo,
        mechanisms=mechs,
        initial_phases=phases,
        horizon=config.horizon_ticks,
        attacker_ids=config.attacker_ids,
        schedules={s.attacker: s.ticks for s in schedules},
    )
    return sim, topo, phases, schedules


def run_scenario(config: ScenarioConfig, *, include_arc_trace: bool | None = None) -> RunArtifacts:
    sim, topo, phases, schedules = build_simulation(config)
    result = sim.run()
    conditions = conditions_for(config, topo)
    if include_arc_trace is None:
        include_arc_trace = config.arc_trace_in_summary
    summary = summarize_run(
        result,
        seed=config.seed,
        config_digest=config_digest(config),
        mechanism=config.mechanism_kind,
        conditions=conditions,
        initial_phases=phases,
        schedules_jsonable=adversary.schedules_to_jsonable(schedules),
        horizon=config.horizon_ticks,
        include_arc_trace=include_arc_trace,
    )
    return RunArtifacts(config=config, topology=topo, conditions=conditions,
                        result=result, summary=summary)


# -- sweeps ----------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    base: ScenarioConfig
    runs: int
    seed_base: int
    workers: int
    write_run_summaries: bool


def parse_sweep(data: dict) -> SweepConfig:
    _require(isinstance(data, dict), "sweep config must be a mapping")
    unknown = set(data) - {"base", "runs", "seed_base", "workers", "write_run_summaries"}
    _require(not unknown, f"unknown sweep fields: {sorted(unknown)}")
    _require("base" in data, "sweep config needs a 'base' scenario")
    base = parse_scenario(data["base"])
    runs = int(data.get("runs", 1))
    _require(runs >= 1, "sweep needs runs >= 1")
    seed_base = int(data.get("seed_base", base.seed))
    workers = int(data.get("workers", 1))
    _require(workers >= 1, "workers must be >= 1")
    return SweepConfig(
        base=base,
        runs=runs,
        seed_base=seed_base,
        workers=workers,
        write_run_summaries=bool(data.get("write_run_summaries", False)),
    )


def with_seed(base: ScenarioConfig, seed: int) -> ScenarioConfig:
    data = canonical_dict(base)
    data["seed"] = seed
    return parse_scenario(data)


def _sweep_worker(base_data: dict, seed: int) -> dict:
    data = dict(base_data)
    data["seed"] = seed
    return run_scenario(parse_scenario(data)).summary.to_dict()


def run_sweep(sweep: SweepConfig) -> tuple[dict, list[dict]]:
    """Execute the seeded runs and build the order-independent aggregate.

    Returns (aggregate, per-run summaries ordered by run index). Results are
    identical bytes regardless of worker count.
    """
    seeds = [sweep.seed_base + k for k in range(sweep.runs)]
    base_data = canonical_dict(sweep.base)
    if sweep.workers == 1:
        summaries = [_sweep_worker(base_data, s) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=sweep.workers) as pool:
            chunk = max(1, len(seeds) // (sweep.workers * 4))
            summaries = list(pool.map(_sweep_worker, [base_data] * len(seeds), seeds,
                                      chunksize=chunk))

    synced = [s for s in summaries if s["sync_tick"] is not None]
    sync_ticks = sorted(s["sync_tick"] for s in synced)
    tpp = sweep.base.clock.ticks_per_period
    aggregate = {
        "runs": sweep.runs,
        "seed_base": sweep.seed_base,
        "config_digest": config_digest(sweep.base),
        "conditions": summaries[0]["conditions"],
        "synced_runs": len(synced),
        "synced_fraction": len(synced) / sweep.runs,
        "sync_tick_min": sync_ticks[0] if sync_ticks else None,
        "sync_tick_median": median_low(sync_ticks) if sync_ticks else None,
        "sync_tick_max": sync_ticks[-1] if sync_ticks else None,
        "max_sync_periods": float(f"{sync_ticks[-1] / tpp:.9g}") if sync_ticks else None,
        "periods_exact_runs": sum(1 for s in synced if s["periods_exact"]),
        "counterexample_seeds": [s["seed"] for s in summaries if s["sync_tick"] is None],
    }
    return aggregate, summaries
