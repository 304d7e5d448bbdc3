"""Moderator control plane: connection reports, scheduling, rotation.

Nodes are addressed by label here (the role an IP address plays on a real
network). Whenever labels have to become graph indices they are laid out in
natural sort order, so ``n2`` precedes ``n10``.
"""

from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    DisconnectedGraph,
    EmptyMembership,
    InconsistentReports,
    InvalidParams,
    MissingVotes,
    ProtocolError,
)
from .graph import (
    DEFAULT_PING_SIZE,
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
    prim_mst,
    slot_length,
)


def natural_key(label: str):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", label)]


@dataclass(frozen=True)
class ConnectionReport:
    reporter: str
    neighbor_costs: tuple[tuple[str, float], ...]
    address: str = ""

    def __post_init__(self):
        seen = set()
        costs = []
        for peer, cost in self.neighbor_costs:
            peer, cost = str(peer), float(cost)
            if peer in seen:
                raise InvalidParams(f"{self.reporter} reports {peer} twice")
            if peer == self.reporter:
                raise InvalidParams(f"{self.reporter} reports a link to itself")
            if not cost > 0:
                raise InvalidParams(f"{self.reporter} reports non-positive cost {cost} to {peer}")
            seen.add(peer)
            costs.append((peer, cost))
        object.__setattr__(self, "reporter", str(self.reporter))
        object.__setattr__(self, "neighbor_costs", tuple(costs))

    def without(self, gone: Iterable[str]) -> "ConnectionReport":
        gone = set(gone)
        return replace(self, neighbor_costs=tuple(nc for nc in self.neighbor_costs if nc[0] not in gone))


def reports_from_graph(graph: WeightedGraph) -> list[ConnectionReport]:
    """Symmetric reports a fully honest network would send for ``graph``."""
    return [
        ConnectionReport(
            graph.labels[u],
            tuple((graph.labels[v], graph.cost(u, v)) for v in graph.neighbors(u)),
            address=f"10.0.0.{u + 1}",
        )
        for u in graph.nodes
    ]


def aggregate_reports(reports: Sequence[ConnectionReport], strict: bool = False) -> AdjacencyMatrix:
    """Merge per-node reports into one symmetric cost matrix.

    A pair reported from both ends gets the mean of the two costs; a pair
    reported from one end takes that value unless ``strict`` is set, in which
    case the one-sided report is rejected. Links to nodes that did not report
    are ignored.
    """
    labels = sorted((r.reporter for r in reports), key=natural_key)
    if len(set(labels)) != len(labels):
        raise InconsistentReports("a node sent more than one report")
    index = {lab: i for i, lab in enumerate(labels)}
    claimed: dict[tuple[int, int], list[float]] = {}
    for r in reports:
        u = index[r.reporter]
        for peer, cost in r.neighbor_costs:
            if peer not in index:
                continue
            v = index[peer]
            claimed.setdefault((min(u, v), max(u, v)), []).append(cost)
    n = len(labels)
    rows = [[NO_LINK] * n for _ in range(n)]
    for i in range(n):
        rows[i][i] = 0.0
    for (u, v), costs in sorted(claimed.items()):
        if len(costs) == 1 and strict:
            raise InconsistentReports(f"only one of {labels[u]}, {labels[v]} reports their link")
        rows[u][v] = rows[v][u] = sum(costs) / len(costs)
    return AdjacencyMatrix(tuple(tuple(r) for r in rows), tuple(labels))


@dataclass(frozen=True)
class Schedule:
    """The moderator's output for one round."""

    tree: SpanningTree
    coloring: TwoColoring
    slot: SlotLength
    neighbor_table: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for u in range(self.tree.n):
            if tuple(self.neighbor_table[u]) != self.tree.neighbors(u):
                raise InvalidParams(f"neighbour table of node {u} disagrees with the tree")
        for u, v, _ in self.tree.edges:
            if self.coloring[u] is self.coloring[v]:
                raise InvalidParams(f"tree edge ({u}, {v}) joins two {self.coloring[u].value} nodes")

    @property
    def n(self) -> int:
        return self.tree.n

    @property
    def labels(self) -> tuple[str, ...]:
        return self.tree.labels

    def neighbors_by_label(self) -> dict[str, list[str]]:
        return {self.labels[u]: [self.labels[v] for v in nbrs] for u, nbrs in enumerate(self.neighbor_table)}

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "tree_edges": [[u, v, c] for u, v, c in self.tree.edges],
            "colors": {self.labels[u]: c.value for u, c in enumerate(self.coloring.colors)},
            "slot_seconds": self.slot.seconds,
            "ping_max_ms": self.slot.ping_max_ms,
            "model_size_mb": self.slot.model_size_mb,
            "ping_size_bytes": self.slot.ping_size_bytes,
            "neighbor_table": self.neighbors_by_label(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def make_schedule(graph: WeightedGraph, tree: SpanningTree, coloring: TwoColoring, model_size: float,
                  ping_size: float = DEFAULT_PING_SIZE) -> Schedule:
    matrix = build_adjacency(graph)
    if tree.n > 1:
        slot = slot_length(max_ping(matrix, tree, coloring), model_size, ping_size)
    else:
        # a lone node never transmits; keep a nominal slot so the type stays valid
        slot = SlotLength(0.0, 0.0, float(model_size), float(ping_size))
    table = tuple(tree.neighbors(u) for u in range(tree.n))
    return Schedule(tree, coloring, slot, table)


def compute_schedule(matrix: AdjacencyMatrix, model_size: float, ping_size: float = DEFAULT_PING_SIZE,
                     root: int = 0) -> Schedule:
    """MST, colouring from ``root`` and slot length for one cost matrix."""
    graph = matrix.to_graph()
    if not graph.is_connected():
        raise DisconnectedGraph("cannot schedule a disconnected network")
    tree = prim_mst(graph, root)
    coloring = bfs_two_coloring(tree, root)
    return make_schedule(graph, tree, coloring, model_size, ping_size)


def elect_initial_moderator(nodes: Sequence[str], seed: int) -> str:
    if not nodes:
        raise EmptyMembership("cannot elect a moderator from no nodes")
    ordered = sorted(nodes, key=natural_key)
    return ordered[random.Random(seed).randrange(len(ordered))]


VoteStrategy = Callable[["ModeratorState"], dict[str, str]]


def round_robin_votes(state: "ModeratorState") -> dict[str, str]:
    """Every node votes for the member after the current moderator."""
    members = state.members
    nxt = members[(members.index(state.current) + 1) % len(members)]
    return {m: nxt for m in members}


@dataclass(frozen=True)
class ModeratorState:
    current: str
    reports: tuple[ConnectionReport, ...]
    round: int = 0
    model_size: float = 1.0
    ping_size: float = DEFAULT_PING_SIZE
    schedule: Schedule | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.reports:
            raise EmptyMembership("moderator state needs at least one member")
        ordered = tuple(sorted(self.reports, key=lambda r: natural_key(r.reporter)))
        object.__setattr__(self, "reports", ordered)
        if self.current not in self.members:
            raise ProtocolError(f"moderator {self.current} is not a member")

    @property
    def members(self) -> tuple[str, ...]:
        return tuple(r.reporter for r in self.reports)

    @property
    def matrix(self) -> AdjacencyMatrix:
        return aggregate_reports(self.reports)

    def scheduled(self, root: int = 0) -> "ModeratorState":
        sched = compute_schedule(self.matrix, self.model_size, self.ping_size, root)
        return replace(self, schedule=sched)


def start_session(reports: Sequence[ConnectionReport], seed: int, model_size: float = 1.0,
                  ping_size: float = DEFAULT_PING_SIZE) -> ModeratorState:
    """Elect the first moderator and let it compute the first schedule."""
    reporters = [r.reporter for r in reports]
    moderator = elect_initial_moderator(reporters, seed)
    return ModeratorState(moderator, tuple(reports), 0, model_size, ping_size).scheduled()


def rotate_moderator(state: ModeratorState, votes: Mapping[str, str] | None = None,
                     strategy: VoteStrategy = round_robin_votes) -> ModeratorState:
    """Hand the moderator role to the plurality winner of ``votes``.

    Ties go to the candidate that sorts first. The connection table travels
    with the role; the round counter advances.
    """
    if votes is None:
        votes = strategy(state)
    members = state.members
    missing = [m for m in members if m not in votes]
    if missing:
        raise MissingVotes(f"no vote from {missing}")
    strangers = [v for v in list(votes) + list(votes.values()) if v not in members]
    if strangers:
        raise ProtocolError(f"votes reference non-members {sorted(set(strangers))}")
    tally = Counter(votes[m] for m in members)
    top = max(tally.values())
    winner = min((c for c, k in tally.items() if k == top), key=natural_key)
    return replace(state, current=winner, round=state.round + 1)


def handle_membership_change(state: ModeratorState, joins: Sequence[ConnectionReport] = (),
                             leaves: Iterable[str] = (), root: int = 0) -> tuple[ModeratorState, Schedule]:
    """Apply joins/leaves and reschedule only if membership changed."""
    leaves = set(leaves)
    if not joins and not leaves:
        if state.schedule is None:
            state = state.scheduled(root)
        return state, state.schedule
    if state.current in leaves:
        raise ProtocolError("the moderator cannot leave mid-round; rotate the role first")
    unknown = leaves - set(state.members)
    if unknown:
        raise ProtocolError(f"leaving nodes {sorted(unknown)} are not members")
    clash = {j.reporter for j in joins} & set(state.members)
    if clash:
        raise ProtocolError(f"joining nodes {sorted(clash)} are already members")
    kept = [r.without(leaves) for r in state.reports if r.reporter not in leaves]
    new = replace(state, reports=tuple(kept) + tuple(joins), schedule=None).scheduled(root)
    return new, new.schedule


# -- control messages -------------------------------------------------------

MESSAGE_KINDS = ("moderator_announce", "connection_report", "schedule", "vote", "handover")


def encode_message(kind: str, sender: str, body: Mapping) -> str:
    if kind not in MESSAGE_KINDS:
        raise ProtocolError(f"unknown message kind {kind!r}")
    return json.dumps({"kind": kind, "from": sender, **body}, sort_keys=True)


def decode_message(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("kind") not in MESSAGE_KINDS:
        raise ProtocolError(f"unknown message kind {doc.get('kind')!r}")
    return doc


def announce_message(state: ModeratorState) -> str:
    return encode_message("moderator_announce", state.current, {"round": state.round})


def report_message(report: ConnectionReport) -> str:
    return encode_message(
        "connection_report",
        report.reporter,
        {"address": report.address, "neighbor_costs": [list(nc) for nc in report.neighbor_costs]},
    )


def report_from_message(text: str) -> ConnectionReport:
    doc = decode_message(text)
    if doc["kind"] != "connection_report":
        raise ProtocolError(f"expected a connection_report, got {doc['kind']}")
    return ConnectionReport(doc["from"], tuple((p, c) for p, c in doc["neighbor_costs"]), doc.get("address", ""))


def schedule_message(state: ModeratorState) -> str:
    if state.schedule is None:
        raise ProtocolError("no schedule computed yet")
    return encode_message("schedule", state.current, {"round": state.round, "schedule": state.schedule.to_dict()})


def vote_message(voter: str, candidate: str, round_: int) -> str:
    return encode_message("vote", voter, {"candidate": candidate, "round": round_})


def handover_message(old: ModeratorState, new: ModeratorState) -> str:
    table = [json.loads(report_message(r)) for r in old.reports]
    return encode_message("handover", old.current, {"to": new.current, "round": new.round, "table": table})


@dataclass
class ControlPlane:
    """Message-level replay of the control plane over a set of node actors.

    Each node keeps a local copy of the connection table only while it is
    moderator; ``log`` records every JSON message exchanged.
    """

    state: ModeratorState
    tables: dict[str, tuple[ConnectionReport, ...] | None] = field(default_factory=dict)
    log: list[str] = field(default_factory=list)

    @classmethod
    def bootstrap(cls, reports: Sequence[ConnectionReport], seed: int, model_size: float = 1.0,
                  ping_size: float = DEFAULT_PING_SIZE) -> "ControlPlane":
        moderator = elect_initial_moderator([r.reporter for r in reports], seed)
        state = ModeratorState(moderator, tuple(reports), 0, model_size, ping_size)
        plane = cls(state, {r.reporter: None for r in reports})
        plane.log.append(announce_message(state))
        received = [report_from_message(m) for m in map(report_message, reports)]
        plane.log.extend(report_message(r) for r in reports)
        plane.state = replace(state, reports=tuple(received)).scheduled()
        plane.tables[moderator] = plane.state.reports
        plane.log.append(schedule_message(plane.state))
        return plane

    def holders(self) -> list[str]:
        return [m for m, t in self.tables.items() if t is not None]

    def rotate(self, strategy: VoteStrategy = round_robin_votes) -> ModeratorState:
        votes = strategy(self.state)
        self.log.extend(vote_message(v, c, self.state.round) for v, c in sorted(votes.items()))
        old = self.state
        new = rotate_moderator(old, votes)
        self.log.append(handover_message(old, new))
        self.tables[old.current] = None
        self.tables[new.current] = new.reports
        self.state = new
        self.log.append(announce_message(new))
        return new

    def change_membership(self, joins: Sequence[ConnectionReport] = (), leaves: Iterable[str] = ()) -> Schedule:
        leaves = set(leaves)
        before = self.state.schedule
        self.log.extend(report_message(j) for j in joins)
        self.state, sched = handle_membership_change(self.state, joins, leaves)
        for gone in leaves:
            self.tables.pop(gone, None)
        for j in joins:
            self.tables.setdefault(j.reporter, None)
        self.tables[self.state.current] = self.state.reports
        if sched is not before:
            self.log.append(schedule_message(self.state))
        return sched


def colors_by_label(schedule: Schedule) -> dict[str, Color]:
    return {schedule.labels[u]: c for u, c in enumerate(schedule.coloring.colors)}
