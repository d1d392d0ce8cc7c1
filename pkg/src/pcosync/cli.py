"""Command-line interface: validate, run, sweep, topology.

Exit codes: 0 success, 1 usage or configuration error, 2 guarantee-condition
validation failure, 3 runtime error. All file outputs are byte-deterministic
for a fixed configuration and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .adversary import ScheduleError
from .core import TWO_PI
from .engine import EngineError, RECEIVED
from .metrics import containing_arc_ticks
from .scenario import (
    ConfigError,
    conditions_for,
    parse_scenario,
    parse_sweep,
    run_scenario,
    run_sweep,
)
from .topology import load_topology

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class _UsageError(Exception):
    def __init__(self, message: str):
        self.message = message


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract reserves 2 for
    # failed guarantee validation, so remap to exit code 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _scenario_from_args(args):
    data = _load_json(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.horizon is not None:
        data["horizon_ticks"] = args.horizon
    return parse_scenario(data)


def _fmt9(x: float) -> str:
    return f"{x:.9g}"


def cmd_validate(args) -> int:
    config = _scenario_from_args(args)
    topo = load_topology(config.topology_desc)
    report = conditions_for(config, topo)
    if report is None:
        print(f"mechanism: {config.mechanism_kind}")
        print("no synchronization guarantee conditions apply to this mechanism")
        return EXIT_OK
    print(f"mechanism: {report.mechanism}")
    print(f"N={report.n}  d={report.d}  attackers M={report.m}")
    print(f"degree condition: d > {report.degree_bound}: {'pass' if report.degree_ok else 'FAIL'}")
    print(
        f"attacker bound: M <= {report.max_allowed_attackers}: "
        f"{'pass' if report.attacker_bound_ok else 'FAIL'}"
    )
    if report.degree_ok and report.attacker_bound_ok:
        print("conditions met - synchronization guaranteed")
        return EXIT_OK
    print("theorem conditions not met - synchronization not guaranteed (running is still permitted)")
    return EXIT_VALIDATION


def _record_to_dict(rec) -> dict:
    if rec.kind == RECEIVED:
        return {"tick": rec.tick, "type": rec.kind, "receiver": rec.node,
                "sender": rec.sender, "seq": rec.seq}
    return {"tick": rec.tick, "type": rec.kind, "id": rec.node}


def write_run_outputs(artifacts, out_dir: Path) -> None:
    """events.jsonl, phases.csv and summary.json for one completed run."""
    out_dir.mkdir(parents=True, exist_ok=True)
    result = artifacts.result
    clock = result.clock
    tpp = clock.ticks_per_period

    with open(out_dir / "events.jsonl", "w", encoding="utf-8") as fh:
        for rec in result.records:
            fh.write(json.dumps(_record_to_dict(rec), separators=(",", ":")) + "\n")

    scale = TWO_PI / tpp
    with open(out_dir / "phases.csv", "w", encoding="utf-8") as fh:
        header = ["tick", "seconds", "arc_rad"] + [f"phase_rad_{i}" for i in result.legit_ids]
        fh.write(",".join(header) + "\n")
        for snap in result.snapshots:
            arc = containing_arc_ticks(snap.phases, tpp)
            row = [str(snap.tick), _fmt9(snap.tick * scale), _fmt9(arc * scale)]
            row.extend(_fmt9(p * scale) for p in snap.phases)
            fh.write(",".join(row) + "\n")

    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(artifacts.summary.to_dict(), fh, indent=2)
        fh.write("\n")


def cmd_run(args) -> int:
    config = _scenario_from_args(args)
    artifacts = run_scenario(config)
    out_dir = Path(args.out_dir)
    write_run_outputs(artifacts, out_dir)
    s = artifacts.summary
    if s.sync_tick is None:
        print(f"seed {s.seed}: no synchronization within {s.horizon_ticks} ticks "
              f"(final arc {_fmt9(s.final_arc_rad)} rad)")
    else:
        print(f"seed {s.seed}: synchronized at tick {s.sync_tick} "
              f"({_fmt9(s.sync_seconds)} s)")
    print(f"outputs written to {out_dir}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    data = _load_json(args.config)
    if args.runs is not None:
        data["runs"] = args.runs
    if args.workers is not None:
        data["workers"] = args.workers
    if args.seed is not None:
        data["seed_base"] = args.seed
    sweep = parse_sweep(data)
    aggregate, summaries = run_sweep(sweep)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "aggregate.json", "w", encoding="utf-8") as fh:
        json.dump(aggregate, fh, indent=2)
        fh.write("\n")
    if sweep.write_run_summaries:
        for s in summaries:
            with open(out_dir / f"run_{s['seed']}.json", "w", encoding="utf-8") as fh:
                json.dump(s, fh, indent=2)
                fh.write("\n")
    print(f"{aggregate['synced_runs']}/{aggregate['runs']} runs synchronized")
    if aggregate["counterexample_seeds"]:
        print(f"counterexample seeds: {aggregate['counterexample_seeds']}")
    print(f"aggregate written to {out_dir / 'aggregate.json'}")
    return EXIT_OK


def cmd_topology(args) -> int:
    data = _load_json(args.config)
    desc = data.get("topology", data)  # accept a bare topology document too
    try:
        topo = load_topology(desc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.format == "json":
        out = {
            "n": topo.n,
            "network_degree": topo.network_degree,
            "nodes": [
                {
                    "id": i,
                    "indegree": topo.indegree[i],
                    "outdegree": topo.outdegree[i],
                    "degree": topo.degree[i],
                    "out_neighbors": list(topo.adjacency[i]),
                }
                for i in range(topo.n)
            ],
        }
        print(json.dumps(out, indent=2))
    elif args.format == "csv":
        print("id,indegree,outdegree,degree,out_neighbors")
        for i in range(topo.n):
            neigh = " ".join(map(str, topo.adjacency[i]))
            print(f"{i},{topo.indegree[i]},{topo.outdegree[i]},{topo.degree[i]},{neigh}")
    else:
        print(f"N={topo.n}  network degree d={topo.network_degree}")
        for i in range(topo.n):
            print(f"node {i}: d-={topo.indegree[i]} d+={topo.outdegree[i]} "
                  f"d={topo.degree[i]} -> {list(topo.adjacency[i])}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="pcosync",
                     description="Deterministic pulse-coupled oscillator network simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check synchronization guarantee conditions")
    p_run = sub.add_parser("run", help="execute one scenario and write its outputs")
    p_sweep = sub.add_parser("sweep", help="execute a seeded batch and aggregate results")
    p_topology = sub.add_parser("topology", help="print the network and its degrees")

    for p in (p_validate, p_run, p_sweep, p_topology):
        p.add_argument("--config", required=True, help="path to the JSON configuration")
    for p in (p_validate, p_run):
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--horizon", type=int, default=None, metavar="TICKS",
                       help="override the simulation horizon")
    p_run.add_argument("--out-dir", default="out", help="output directory (default: out)")
    p_sweep.add_argument("--out-dir", default="out", help="output directory (default: out)")
    p_sweep.add_argument("--seed", type=int, default=None, help="override the sweep seed base")
    p_sweep.add_argument("--runs", type=int, default=None, help="override the run count")
    p_sweep.add_argument("--workers", type=int, default=None, help="override worker count")
    p_topology.add_argument("--format", choices=("text", "json", "csv"), default="text")

    p_validate.set_defaults(func=cmd_validate)
    p_run.set_defaults(func=cmd_run)
    p_sweep.set_defaults(func=cmd_sweep)
    p_topology.set_defaults(func=cmd_topology)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(exc.message, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ScheduleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EngineError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
