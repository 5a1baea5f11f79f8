"""Command-line entry points: trace generation, static checks, single
monitoring runs, and batch experiments.

Machine-readable results go to stdout; log and warning text goes to stderr.
Exit codes: 0 for success / property holds, 1 for property violations or
timeout verdicts, 2 for input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import analysis, engine, ltl as lt, metrics as mt, traces
from .automaton import DecentralizedSpec, load_spec_file, validate
from .errors import DemonError
from .expr import UNKNOWN

_DISTRIBUTIONS = {"normal": traces.Normal, "binomial": traces.Binomial, "beta": traces.Beta}


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _distribution_from(data: dict) -> traces.Distribution:
    kind = data.get("kind")
    if kind not in _DISTRIBUTIONS:
        raise DemonError(f"unknown distribution kind {kind!r}")
    params = {k: v for k, v in data.items() if k != "kind"}
    return _DISTRIBUTIONS[kind](**params)


def cmd_gen_traces(args: argparse.Namespace) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = int(config.get("count", 1))
    base_seed = int(config.get("seed", 0))
    written = 0
    for dist_data in config["distributions"]:
        dist = _distribution_from(dist_data)
        kind = dist_data["kind"]
        for i in range(count):
            cfg = traces.TraceGenConfig(
                components=int(config["components"]),
                aps_per_component=int(config.get("aps_per_component", 2)),
                length=int(config.get("length", 60)),
                distribution=dist,
                seed=base_seed + written,
            )
            path = out_dir / f"trace_{kind}_{i:03d}.csv"
            traces.store(traces.generate(cfg), str(path))
            written += 1
    print(written)
    return 0


def _load_graph(path: str) -> analysis.Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return analysis.graph_from_dict(json.load(fh))


def cmd_check(args: argparse.Namespace) -> int:
    if args.mode == "compatibility":
        net = _load_graph(args.network)
        sysg = _load_graph(args.system)
        constraint = {}
        if args.constraint:
            with open(args.constraint, "r", encoding="utf-8") as fh:
                constraint = json.load(fh)
        ok, assignment = analysis.compatible(net, sysg, constraint)
        print(json.dumps({"compatible": ok, "assignment": assignment}, sort_keys=True))
        return 0 if ok else 1

    spec = load_spec_file(args.spec)
    if args.mode == "validate":
        if isinstance(spec, DecentralizedSpec):
            reports = {name: validate(spec.monitors[name]) for name in spec.monitor_labels}
            ok = all(r.ok for r in reports.values())
            payload = {
                name: {
                    "determinism": [q for q, _, _ in r.determinism],
                    "completeness": r.completeness,
                }
                for name, r in reports.items()
            }
        else:
            r = validate(spec)
            ok = r.ok
            payload = {
                "determinism": [q for q, _, _ in r.determinism],
                "completeness": r.completeness,
            }
        print(json.dumps({"valid": ok, "violations": payload}, sort_keys=True))
        return 0 if ok else 1

    assert args.mode == "monitorability"
    if isinstance(spec, DecentralizedSpec):
        ok = analysis.decentralized_monitorable(spec)
        witnesses = {}
        for name in spec.monitor_labels:
            mon_ok, marked = analysis.ca_monitorable(spec.monitors[name])
            if not mon_ok:
                witnesses[name] = sorted(set(spec.monitors[name].states) - marked)
        if analysis.has_cycle(analysis.mdg(spec)):
            witnesses["__dependency_cycle__"] = True
        print(json.dumps({"monitorable": ok, "witnesses": witnesses}, sort_keys=True))
        return 0 if ok else 1
    ok, marked = analysis.ca_monitorable(spec)
    bad = sorted(set(spec.states) - marked)
    print(json.dumps({"monitorable": ok, "non_monitorable_states": bad}, sort_keys=True))
    return 0 if ok else 1


def _spec_input_for(algorithm: str, spec_path: str):
    """Resolve a spec file for one algorithm.

    LTL inputs (plain text or {"ltl": ...} JSON) drive every algorithm:
    choreography consumes the formula, the others its synthesized automaton.
    Automaton JSON only fits the centralized algorithms.
    """
    text = Path(spec_path).read_text(encoding="utf-8").strip()
    formula = None
    if text.startswith("{"):
        data = json.loads(text)
        if "ltl" in data:
            formula = lt.parse_ltl(data["ltl"])
    else:
        formula = lt.parse_ltl(text)
    if algorithm == "chor":
        if formula is None:
            raise DemonError("choreography requires an LTL formula input")
        return formula
    if formula is not None:
        return lt.synthesize(formula)
    spec = load_spec_file(spec_path)
    if isinstance(spec, DecentralizedSpec):
        raise DemonError(f"algorithm {algorithm!r} needs a centralized specification")
    return spec


def _sim_config(args: argparse.Namespace, algorithm: str) -> engine.SimConfig:
    return engine.SimConfig(
        algorithm=algorithm,
        comm_delay=args.comm_delay,
        initial_active=args.active,
        timeout_slack=args.timeout_slack,
        seed=args.seed,
    )


def _system_graph(args: argparse.Namespace, tr) -> analysis.Graph:
    if getattr(args, "system", None):
        return _load_graph(args.system)
    return analysis.complete_graph(tr.components)


def cmd_run(args: argparse.Namespace) -> int:
    tr = traces.load(args.trace)
    cfg = _sim_config(args, args.algorithm)
    spec_input = _spec_input_for(args.algorithm, args.spec)
    system = _system_graph(args, tr)
    run = engine.simulate(cfg, spec_input, system, tr)
    summary = mt.summarize(run.record)
    if args.format == "json":
        print(json.dumps(run.to_dict(), sort_keys=True))
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(mt.CSV_HEADER)
        writer.writerow(
            mt.csv_row(
                cfg.algorithm,
                len(system.nodes),
                Path(args.spec).name,
                Path(args.trace).name,
                run.verdict,
                run.stop_round,
                summary,
            )
        )
    return 0 if run.verdict is not UNKNOWN else 1


def _trace_paths(base: Path, entries) -> list[str]:
    """Trace sources may be files or directories of CSV traces."""
    out = []
    for entry in entries:
        path = base / entry
        if path.is_dir():
            out.extend(str(p) for p in sorted(path.glob("*.csv")))
        else:
            out.append(str(path))
    return out


def cmd_experiment(args: argparse.Namespace) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    base = Path(args.config).parent
    if not (config.get("algorithms") and config.get("specs") and config.get("traces")):
        raise DemonError("experiment needs at least one algorithm, spec, and trace source")
    trace_paths = _trace_paths(base, config["traces"])
    rows = []
    for algorithm in config["algorithms"]:
        for spec_entry in config["specs"]:
            spec_path = str(base / spec_entry)
            for trace_path in trace_paths:
                try:
                    tr = traces.load(trace_path)
                    cfg = engine.SimConfig(
                        algorithm=algorithm,
                        comm_delay=int(config.get("comm_delay", 1)),
                        initial_active=int(config.get("active", 1)),
                        timeout_slack=int(config.get("timeout_slack", 5)),
                        seed=int(config.get("seed", 0)),
                    )
                    spec_input = _spec_input_for(algorithm, spec_path)
                    system = analysis.complete_graph(tr.components)
                    run = engine.simulate(cfg, spec_input, system, tr)
                except (DemonError, OSError, json.JSONDecodeError) as exc:
                    if args.strict:
                        raise
                    _log(f"skipping {algorithm}/{spec_entry}/{Path(trace_path).name}: {exc}")
                    continue
                rows.append(
                    mt.csv_row(
                        algorithm,
                        len(system.nodes),
                        Path(spec_path).name,
                        Path(trace_path).name,
                        run.verdict,
                        run.stop_round,
                        mt.summarize(run.record),
                    )
                )
    rows.sort()
    out_path = config.get("output")
    if out_path:
        with open(str(base / out_path), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(mt.CSV_HEADER)
            writer.writerows(rows)
        _log(f"wrote {len(rows)} rows")
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(mt.CSV_HEADER)
        writer.writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demon", description="Decentralized-specification monitoring toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-traces", help="generate synthetic trace files")
    p.add_argument("config", help="JSON generation config")
    p.add_argument("out", help="output directory")
    p.set_defaults(fn=cmd_gen_traces)

    p = sub.add_parser("check", help="static checks on specifications")
    p.add_argument("mode", choices=["monitorability", "compatibility", "validate"])
    p.add_argument("--spec", help="specification file (monitorability/validate)")
    p.add_argument("--network", help="monitor network graph file (compatibility)")
    p.add_argument("--system", help="system graph file (compatibility)")
    p.add_argument("--constraint", help="constraint assignment file (compatibility)")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", help="one monitoring run")
    p.add_argument("--spec", required=True, help="automaton JSON or LTL text file")
    p.add_argument("--trace", required=True, help="trace CSV file")
    p.add_argument("--algorithm", required=True, choices=list(engine.ALGORITHMS))
    p.add_argument("--system", help="system graph file (default: complete)")
    p.add_argument("--comm-delay", dest="comm_delay", type=int, default=1)
    p.add_argument("--active", type=int, default=1)
    p.add_argument("--timeout-slack", dest="timeout_slack", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("experiment", help="batch of runs from a config file")
    p.add_argument("config", help="experiment JSON config")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(fn=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "check":
        if args.mode == "compatibility" and not (args.network and args.system):
            parser.error("compatibility needs --network and --system")
        if args.mode != "compatibility" and not args.spec:
            parser.error(f"{args.mode} needs --spec")
    try:
        return args.fn(args)
    except (DemonError, OSError, json.JSONDecodeError, KeyError) as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
