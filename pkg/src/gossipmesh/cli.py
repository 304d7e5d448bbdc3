"""Command line front end: ``gossipmesh {topo,schedule,run,sweep,trace}``.

Configuration precedence, lowest to highest: built-in defaults, the JSON
file given with ``--config``, then explicit flags. The master seed defaults
to ``$GOSSIPMESH_SEED`` (or 0).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import reference
from .catalog import MODEL_ORDER
from .errors import GossipMeshError
from .experiment import (
    GRID_TOPOLOGIES,
    ExperimentConfig,
    default_seed,
    render_tables,
    run_cell,
    run_experiment,
    sweep,
    write_csv,
)
from .graph import WeightedGraph, build_adjacency
from .protocol import compute_schedule

log = logging.getLogger("gossipmesh")

# flag dest -> config field
_FLAG_FIELDS = {
    "topology": "topology", "n": "n", "seed": "seed", "model": "models", "mode": "mode",
    "subnets": "subnets", "uplink": "uplink", "downlink": "downlink", "trunk": "trunk",
    "ping_size": "ping_size", "slot_policy": "slot_policy", "flood_graph": "flood_graph",
    "root": "root", "out": "output", "trace": "trace",
}


def _split_models(values) -> tuple[str, ...]:
    out = []
    for v in values:
        out.extend(x.strip() for x in v.split(",") if x.strip())
    return tuple(out)


def _load_config(args) -> ExperimentConfig:
    doc: dict = {"seed": default_seed()}
    if getattr(args, "config", None):
        doc.update(json.loads(Path(args.config).read_text()))
    cfg = ExperimentConfig.from_dict(doc)
    overrides = {}
    for dest, fieldname in _FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is None or value is False:
            continue
        overrides[fieldname] = _split_models(value) if dest == "model" else value
    return replace(cfg, **overrides).validate()


def _add_common(p: argparse.ArgumentParser, models: bool = True) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--topology", help="complete | er:p=0.3 | ws:k=4,beta=0.2 | ba:m=2")
    p.add_argument("--n", type=int, help="node count")
    p.add_argument("--seed", type=int, help="master seed (default $GOSSIPMESH_SEED or 0)")
    p.add_argument("--subnets", type=int, help="number of routers/subnets")
    p.add_argument("--uplink", type=float, help="per-node uplink, MB/s")
    p.add_argument("--downlink", type=float, help="per-node downlink, MB/s")
    p.add_argument("--trunk", type=float, help="per router-pair trunk, MB/s")
    p.add_argument("--ping-size", type=float, dest="ping_size", help="ping payload in bytes")
    p.add_argument("--slot-policy", choices=("adaptive", "grid"), dest="slot_policy")
    p.add_argument("--flood-graph", choices=("overlay", "underlay"), dest="flood_graph")
    p.add_argument("--root", type=int, help="colouring root node")
    if models:
        p.add_argument("--model", action="append", help="model code(s): " + ",".join(MODEL_ORDER))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gossipmesh", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topo", help="generate or inspect an underlay graph")
    _add_common(p, models=False)
    p.add_argument("--inspect", help="summarise an existing graph JSON file instead")
    p.add_argument("--out", help="write the graph JSON here")

    p = sub.add_parser("schedule", help="MST, colouring and slot length for a graph")
    _add_common(p)
    p.add_argument("--graph", help="graph JSON file (otherwise generated from --topology)")
    p.add_argument("--out", help="write the schedule JSON here")

    p = sub.add_parser("run", help="simulate one configuration")
    _add_common(p)
    p.add_argument("--mode", choices=("gossip", "flood", "both"))
    p.add_argument("--out", help="output directory (default: CSV to stdout)")
    p.add_argument("--trace", action="store_true", help="also dump the gossip trace as JSON lines")
    p.add_argument("--reference-round", "--table1-fixture", action="store_true", dest="reference_round",
                   help="replay the ten-node reference round and check it")

    p = sub.add_parser("sweep", help="topology x model grid averaged over seeds")
    _add_common(p)
    p.add_argument("--topologies", nargs="+", default=list(GRID_TOPOLOGIES))
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="output directory (default: tables to stdout)")

    p = sub.add_parser("trace", help="print the slot-by-slot gossip trace")
    _add_common(p)
    p.add_argument("--format", choices=("table", "jsonl"), default="table")
    p.add_argument("--reference-round", "--table1-fixture", action="store_true", dest="reference_round")
    return parser


def cmd_topo(args) -> int:
    if args.inspect:
        g = WeightedGraph.from_json(Path(args.inspect).read_text())
        degrees = [g.degree(u) for u in g.nodes]
        print(json.dumps({"n": g.n, "edges": len(g.edges), "connected": g.is_connected(),
                          "degrees": dict(zip(g.labels, degrees)), "total_cost_ms": g.total_weight},
                         sort_keys=True))
        return 0
    from .experiment import build_network

    cfg = _load_config(args)
    text = build_network(cfg, cfg.seed).to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_schedule(args) -> int:
    cfg = _load_config(args)
    from .catalog import catalog_lookup
    from .experiment import build_network

    graph = WeightedGraph.from_json(Path(args.graph).read_text()) if args.graph else build_network(cfg, cfg.seed)
    size = catalog_lookup(cfg.models[0]).capacity_mb
    sched = compute_schedule(build_adjacency(graph), size, cfg.ping_size, cfg.root)
    text = json.dumps(sched.to_dict(), sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _replay_reference(out_dir: str | None, dump_trace: bool) -> int:
    trace, problems = reference.replay()
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "reference_trace.jsonl").write_text(trace.to_jsonl())
        (d / "reference_trace.txt").write_text(trace.render_table())
    elif dump_trace:
        sys.stdout.write(trace.render_table())
    if problems:
        for p in problems:
            print(f"MISMATCH {p}", file=sys.stderr)
        return 1
    print(f"reference round replayed: {trace.n_slots} slots, {trace.message_count} transmissions, "
          f"all {reference.EXPECTED_SLOTS} rows match")
    return 0


def cmd_run(args) -> int:
    if args.reference_round:
        return _replay_reference(args.out, args.trace)
    cfg = _load_config(args)
    cells, csv_text = run_experiment(cfg)
    if not cfg.output:
        sys.stdout.write(csv_text)
        return 0
    d = Path(cfg.output)
    d.mkdir(parents=True, exist_ok=True)
    (d / "metrics.csv").write_text(csv_text)
    (d / "config.json").write_text(json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n")
    means = {(cfg.topology, c.model, mode): m for c in cells for mode, m in c.metrics.items()}
    (d / "tables.txt").write_text(render_tables(means, [cfg.topology], [c.model for c in cells], cfg.result_dict()))
    if cfg.trace:
        for c in cells:
            if c.gossip_trace is not None:
                (d / f"trace_{c.model}.jsonl").write_text(c.gossip_trace.to_jsonl())
    log.info("wrote %s", d)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    models = cfg.models if args.model else MODEL_ORDER
    result = sweep(cfg, args.topologies, models, args.seeds, args.jobs)
    tables = render_tables(result.means, args.topologies, models, result.config)
    csv_text = write_csv(None, result.rows(), result.config)
    if cfg.output:
        d = Path(cfg.output)
        d.mkdir(parents=True, exist_ok=True)
        (d / "grid.csv").write_text(csv_text)
        (d / "tables.txt").write_text(tables)
    else:
        sys.stdout.write(tables)
    for topo, model, seed, why in result.failures:
        print(f"FAILED cell topology={topo} model={model} seed={seed}: {why}", file=sys.stderr)
    return 1 if result.failures else 0


def cmd_trace(args) -> int:
    if args.reference_round:
        trace = reference.replay()[0]
    else:
        cfg = replace(_load_config(args), mode="gossip")
        trace = run_cell(cfg, cfg.models[0]).gossip_trace
    sys.stdout.write(trace.to_jsonl() if args.format == "jsonl" else trace.render_table())
    return 0


COMMANDS = {"topo": cmd_topo, "schedule": cmd_schedule, "run": cmd_run, "sweep": cmd_sweep, "trace": cmd_trace}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (GossipMeshError, OSError, json.JSONDecodeError) as exc:
        print(f"gossipmesh: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
