"""Deterministic simulator and analysis toolkit for attack-resilient
synchronization of pulse-coupled oscillator networks."""

from .adversary import AttackSchedule, AttackSpec, ScheduleError, generate, validate_schedule
from .core import TickClock, floor_split_holds
from .engine import (
    EngineError,
    LogRecord,
    OscillatorState,
    PhaseSnapshot,
    Simulation,
    SimulationResult,
    next_wrap_tick,
    receive_count,
)
from .mechanisms import (
    MechanismConfig,
    apply_conventional_jump,
    build_mechanism,
    prf,
)
from .metrics import (
    collective_period,
    containing_arc,
    containing_arc_ticks,
    detect_sync,
    summarize_run,
)
from .scenario import (
    ConfigError,
    ScenarioConfig,
    SweepConfig,
    config_digest,
    parse_scenario,
    parse_sweep,
    run_scenario,
    run_sweep,
)
from .topology import (
    ConditionReport,
    Topology,
    build_circle_deployment,
    check_sync_conditions,
    from_adjacency,
    is_strongly_connected,
    load_topology,
    out_neighbors,
)

__version__ = "0.1.0"
