"""Tree-scheduled gossip for decentralised model exchange, plus a flooding baseline and
a flow-level simulator to compare them."""

from .errors import GossipMeshError
from .graph import (
    NO_LINK,
    AdjacencyMatrix,
    Color,
    SlotLength,
    SpanningTree,
    TwoColoring,
    WeightedGraph,
    bfs_two_coloring,
    build_adjacency,
    max_ping,
    max_ping_per_color,
    prim_mst,
    slot_length,
)
from .gossip import ModelRef, flood_round, run_round, step_slot
from .protocol import Schedule, aggregate_reports, compute_schedule
from .sim import RoundMetrics, UnderlayConfig, allocate_rates, simulate

__version__ = "0.1.0"

__all__ = [
    "NO_LINK", "AdjacencyMatrix", "Color", "GossipMeshError", "ModelRef", "RoundMetrics", "Schedule",
    "SlotLength", "SpanningTree", "TwoColoring", "UnderlayConfig", "WeightedGraph", "aggregate_reports",
    "allocate_rates", "bfs_two_coloring", "build_adjacency", "compute_schedule", "flood_round", "max_ping",
    "max_ping_per_color", "prim_mst", "run_round", "simulate", "slot_length", "step_slot",
]
