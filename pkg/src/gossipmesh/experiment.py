"""Experiment configuration, single-cell runs, comparisons and sweeps."""

from __future__ import annotations

import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations
from typing import Iterable, Sequence

from .catalog import MODEL_ORDER, catalog_lookup
from .errors import GossipMeshError, InvalidParams
from .gossip import FloodTrace, GossipTrace, default_models, flood_round, run_round
from .graph import DEFAULT_PING_SIZE, WeightedGraph
from .protocol import Schedule, compute_schedule, reports_from_graph, start_session
from .sim import SLOT_POLICIES, RoundMetrics, UnderlayConfig, simulate
from .topology import DISPLAY_NAMES, SubnetAssignment, assign_costs, generate, parse_topology

MODES = ("gossip", "flood", "both")
FLOOD_GRAPHS = ("overlay", "underlay")
GRID_TOPOLOGIES = ("er:p=0.3", "ws:k=4,beta=0.2", "ba:m=2", "complete")
CSV_HEADER = "topology,model,mode,bandwidth_mbps,mean_transfer_s,total_round_s,messages"
SEED_ENV = "GOSSIPMESH_SEED"


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def derive_seed(master: int, topology: str, rep: int) -> int:
    """Per-cell seed: first 8 bytes of sha256("master:topology:rep").

    The model is deliberately left out so every model in a sweep row sees
    the same network.
    """
    digest = hashlib.sha256(f"{master}:{parse_topology(topology).spec}:{rep}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class ExperimentConfig:
    topology: str = "complete"
    n: int = 10
    seed: int = 0
    models: tuple[str, ...] = ("b3",)
    mode: str = "both"
    subnets: int = 3
    intra_cost_range: tuple[float, float] = (0.2, 1.0)
    inter_multiplier_range: tuple[float, float] = (10.0, 60.0)
    uplink: float = 10.0
    downlink: float = 10.0
    trunk: float = 20.0
    ping_size: float = DEFAULT_PING_SIZE
    slot_policy: str = "adaptive"
    flood_graph: str = "overlay"
    root: int = 0
    output: str | None = None
    trace: bool = False

    def validate(self) -> "ExperimentConfig":
        kind = parse_topology(self.topology)
        kind.validate(self.n)
        for code in self.models:
            catalog_lookup(code)
        if not self.models:
            raise InvalidParams("at least one model is required")
        if self.mode not in MODES:
            raise InvalidParams(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.slot_policy not in SLOT_POLICIES:
            raise InvalidParams(f"slot policy must be one of {SLOT_POLICIES}, got {self.slot_policy!r}")
        if self.flood_graph not in FLOOD_GRAPHS:
            raise InvalidParams(f"flood graph must be one of {FLOOD_GRAPHS}, got {self.flood_graph!r}")
        if not 1 <= self.subnets <= self.n:
            raise InvalidParams(f"subnets must lie in [1, n], got {self.subnets}")
        if not 0 <= self.root < self.n:
            raise InvalidParams(f"root {self.root} is not a node")
        if not self.ping_size > 0:
            raise InvalidParams("ping_size must be positive")
        return self

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["models"] = list(self.models)
        doc["intra_cost_range"] = list(self.intra_cost_range)
        doc["inter_multiplier_range"] = list(self.inter_multiplier_range)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise InvalidParams(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        if isinstance(doc.get("models"), str):
            doc["models"] = [doc["models"]]
        for key in ("models", "intra_cost_range", "inter_multiplier_range"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)

    def result_dict(self) -> dict:
        """Everything that influences results; output location is left out."""
        doc = self.to_dict()
        doc.pop("output")
        doc.pop("trace")
        return doc

    def subnet_assignment(self) -> SubnetAssignment:
        return SubnetAssignment.even(self.n, self.subnets, intra_cost_range=tuple(self.intra_cost_range),
                                     inter_multiplier_range=tuple(self.inter_multiplier_range))

    def underlay(self) -> UnderlayConfig:
        return UnderlayConfig(self.subnet_assignment(), self.uplink, self.downlink, self.trunk)


@dataclass
class CellResult:
    topology: str
    model: str
    seed: int
    graph: WeightedGraph
    schedule: Schedule
    gossip_trace: GossipTrace | None = None
    flood_trace: FloodTrace | None = None
    metrics: dict[str, RoundMetrics] = field(default_factory=dict)


def build_network(config: ExperimentConfig, seed: int) -> WeightedGraph:
    kind = parse_topology(config.topology)
    graph = generate(kind, config.n, seed)
    return assign_costs(graph, config.subnet_assignment(), seed)


def overlay_graph(graph: WeightedGraph) -> WeightedGraph:
    return WeightedGraph.from_edges(graph.n, [(u, v, 1.0) for u, v in combinations(range(graph.n), 2)],
                                    graph.labels)


def run_cell(config: ExperimentConfig, model: str, seed: int | None = None) -> CellResult:
    """Build the network, schedule it and simulate the requested modes."""
    seed = config.seed if seed is None else seed
    spec = catalog_lookup(model)
    graph = build_network(config, seed)
    # the moderator only sees what the nodes report
    state = start_session(reports_from_graph(graph), seed, spec.capacity_mb, config.ping_size)
    schedule = compute_schedule(state.matrix, spec.capacity_mb, config.ping_size, config.root)
    models = default_models(config.n, spec.capacity_mb)
    underlay = config.underlay()
    out = CellResult(config.topology, spec.code, seed, graph, schedule)
    if config.mode in ("gossip", "both"):
        out.gossip_trace = run_round(schedule, models)
        out.metrics["gossip"] = simulate(out.gossip_trace, underlay, config.slot_policy)
    if config.mode in ("flood", "both"):
        target = overlay_graph(graph) if config.flood_graph == "overlay" else graph
        out.flood_trace = flood_round(target, models)
        out.metrics["flood"] = simulate(out.flood_trace, underlay)
    return out


@dataclass(frozen=True)
class ComparisonReport:
    topology: str
    model: str
    seed: int
    proposed: RoundMetrics
    broadcast: RoundMetrics

    @property
    def ratios(self) -> dict[str, float]:
        """proposed / broadcast, per metric."""
        p, b = self.proposed.to_dict(), self.broadcast.to_dict()
        return {k: (p[k] / b[k] if b[k] else math.nan) for k in p}


def compare(config: ExperimentConfig, model: str | None = None, seed: int | None = None) -> ComparisonReport:
    cfg = replace(config, mode="both")
    model = model or config.models[0]
    cell = run_cell(cfg, model, seed)
    return ComparisonReport(cfg.topology, cell.model, cell.seed, cell.metrics["gossip"], cell.metrics["flood"])


def _fmt(x: float | int) -> str:
    if isinstance(x, int):
        return str(x)
    return format(x, ".6f")


def csv_rows(rows: Iterable[tuple[str, str, str, RoundMetrics]]) -> list[str]:
    out = []
    for topo, model, mode, m in rows:
        d = m.to_dict()
        out.append(",".join([topo, model, mode] + [_fmt(d[k]) for k in
                                                   ("bandwidth_mbps", "mean_transfer_s", "total_round_s", "messages")]))
    return out


def write_csv(path_or_buf, rows, config_doc: dict) -> str:
    text = io.StringIO()
    text.write(f"# config={json.dumps(config_doc, sort_keys=True)}\n")
    text.write(CSV_HEADER + "\n")
    for line in csv_rows(rows):
        text.write(line + "\n")
    body = text.getvalue()
    if path_or_buf is not None:
        with open(path_or_buf, "w", encoding="utf-8") as fh:
            fh.write(body)
    return body


def run_experiment(config: ExperimentConfig) -> tuple[list[CellResult], str]:
    """Run every model of ``config`` on one seed; returns cells and CSV text."""
    config.validate()
    cells = [run_cell(config, m) for m in config.models]
    rows = [(config.topology, c.model, mode, c.metrics[mode]) for c in cells for mode in ("gossip", "flood")
            if mode in c.metrics]
    return cells, write_csv(None, rows, config.result_dict())


# -- sweeps -----------------------------------------------------------------

@dataclass
class SweepResult:
    means: dict[tuple[str, str, str], RoundMetrics]
    per_seed: dict[tuple[str, str, str], list[RoundMetrics]]
    failures: list[tuple[str, str, int, str]]
    config: dict

    def rows(self) -> list[tuple[str, str, str, RoundMetrics]]:
        order = {t: i for i, t in enumerate(self.config["topologies"])}
        morder = {m: i for i, m in enumerate(MODEL_ORDER)}
        keys = sorted(self.means, key=lambda k: (order.get(k[0], 99), morder.get(k[1], 99), k[2]))
        return [(k[0], k[1], k[2], self.means[k]) for k in keys]


def _run_sweep_cell(args: tuple[dict, str, str, int]) -> tuple[str, str, int, dict | str]:
    cfg_doc, topo, model, seed = args
    cfg = ExperimentConfig.from_dict(cfg_doc)
    try:
        cell = run_cell(replace(cfg, topology=topo), model, seed)
        return topo, model, seed, {mode: asdict(m) for mode, m in cell.metrics.items()}
    except GossipMeshError as exc:
        return topo, model, seed, f"{type(exc).__name__}: {exc}"


def _mean(ms: Sequence[RoundMetrics]) -> RoundMetrics:
    k = len(ms)
    return RoundMetrics(
        math.fsum(m.effective_bandwidth for m in ms) / k,
        math.fsum(m.mean_single_transfer for m in ms) / k,
        math.fsum(m.total_round_time for m in ms) / k,
        round(sum(m.message_count for m in ms) / k),
    )


def sweep(config: ExperimentConfig, topologies: Sequence[str] = GRID_TOPOLOGIES,
          models: Sequence[str] = MODEL_ORDER, seeds: int = 5, jobs: int = 1) -> SweepResult:
    """Run topologies x models x seeds; per-cell seeds derive from ``config.seed``."""
    if seeds < 1 or not topologies or not models:
        raise InvalidParams("a sweep needs at least one topology, model and seed")
    base = replace(config, mode="both", models=tuple(models))
    for topo in topologies:
        replace(base, topology=topo).validate()
    doc = base.result_dict()
    tasks = [(doc, t, m, derive_seed(config.seed, t, r)) for t in topologies for m in models for r in range(seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_sweep_cell, tasks))
    else:
        results = [_run_sweep_cell(t) for t in tasks]
    per_seed: dict[tuple[str, str, str], list[RoundMetrics]] = {}
    failures = []
    for topo, model, seed, payload in sorted(results, key=lambda r: (r[0], r[1], r[2])):
        if isinstance(payload, str):
            failures.append((topo, model, seed, payload))
            continue
        for mode, m in payload.items():
            per_seed.setdefault((topo, model, mode), []).append(RoundMetrics(**m))
    means = {k: _mean(v) for k, v in per_seed.items()}
    doc["topologies"] = list(topologies)
    doc["seeds"] = seeds
    return SweepResult(means, per_seed, failures, doc)


METRIC_TITLES = (
    ("effective_bandwidth", "Bandwidth (MB/s)"),
    ("mean_single_transfer", "Average time (s) for one transfer"),
    ("total_round_time", "Average total time (s) for one communication round"),
)


def render_tables(means: dict[tuple[str, str, str], RoundMetrics], topologies: Sequence[str],
                  models: Sequence[str], config_doc: dict | None = None) -> str:
    """Aligned text tables: one per metric, broadcast block then proposed block."""
    out = io.StringIO()
    if config_doc is not None:
        out.write(f"config: {json.dumps(config_doc, sort_keys=True)}\n\n")
    for attr, title in METRIC_TITLES:
        head = ["topology"] + [f"B:{m}" for m in models] + [f"P:{m}" for m in models]
        rows = [head]
        for topo in topologies:
            name = DISPLAY_NAMES[parse_topology(topo).name]
            row = [name]
            for mode in ("flood", "gossip"):
                for m in models:
                    metric = means.get((topo, m, mode))
                    row.append("-" if metric is None else f"{getattr(metric, attr):.3f}")
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
        out.write(title + "  (B = broadcast/flooding, P = proposed)\n")
        for r in rows:
            out.write("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))) + "\n")
        out.write("\n")
    return out.getvalue()
