"""Slotted FIFO gossip over the spanning tree, and the flooding baseline.

The gossip engine is a synchronous state machine. On every slot the nodes of
the active colour pop the head of their queue and push that model to each
tree neighbour except the one it came from. Red slots are the odd ones.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import InconsistentState, NonTermination
from .graph import Color, WeightedGraph
from .protocol import Schedule

SELF = -1  # ``received_from`` marker for a node's own model


@dataclass(frozen=True, order=True)
class ModelRef:
    owner: int
    round: int = 0
    size: float = 1.0

    @property
    def key(self) -> tuple[int, int]:
        return (self.owner, self.round)


@dataclass
class QueueEntry:
    model: ModelRef
    received_from: int
    targets: tuple[int, ...]  # receivers that still need this model


@dataclass
class GossipNodeState:
    id: int
    color: Color
    neighbors: tuple[int, ...]
    queue: deque = field(default_factory=deque)
    store: dict = field(default_factory=dict)  # model key -> ModelRef, in arrival order

    @property
    def degree(self) -> int:
        return len(self.neighbors)

    def queued_owners(self) -> tuple[int, ...]:
        return tuple(e.model.owner for e in self.queue)

    def stored_owners(self) -> tuple[int, ...]:
        return tuple(m.owner for m in self.store.values())


@dataclass(frozen=True)
class SlotTick:
    index: int

    @property
    def color(self) -> Color:
        return Color.RED if self.index % 2 == 1 else Color.BLUE


@dataclass(frozen=True)
class Transmission:
    slot: int
    sender: int
    receiver: int
    model: ModelRef


def default_models(n: int, size: float = 1.0, round_: int = 0) -> dict[int, ModelRef]:
    return {u: ModelRef(u, round_, size) for u in range(n)}


def init_round(schedule: Schedule, models: Mapping[int, ModelRef]) -> dict[int, GossipNodeState]:
    states = {}
    for u in range(schedule.n):
        model = models[u]
        nbrs = tuple(schedule.neighbor_table[u])
        st = GossipNodeState(u, schedule.coloring[u], nbrs)
        st.queue.append(QueueEntry(model, SELF, nbrs))
        st.store[model.key] = model
        states[u] = st
    return states


def _copy_state(st: GossipNodeState) -> GossipNodeState:
    # models are immutable, so only the containers and entries need copying
    queue = deque(QueueEntry(e.model, e.received_from, e.targets) for e in st.queue)
    return GossipNodeState(st.id, st.color, st.neighbors, queue, dict(st.store))


def step_slot(states: Mapping[int, GossipNodeState], tick: SlotTick,
              offline: Iterable[int] = ()) -> tuple[dict[int, GossipNodeState], list[Transmission]]:
    """Advance one slot; ``offline`` nodes neither send nor receive.

    An entry leaves its sender's queue only once every intended receiver has
    it, so a receiver that was offline gets the model on the sender's next
    active slot and nobody gets it twice.
    """
    offline = set(offline)
    new = {u: _copy_state(st) for u, st in states.items()}
    sent: list[Transmission] = []
    for u in sorted(new):
        st = new[u]
        if st.color is not tick.color or not st.queue or u in offline:
            continue
        entry = st.queue[0]
        if entry.model.key not in st.store:
            raise InconsistentState(f"node {u} was asked to send {entry.model.key} which it never stored")
        delivered = [v for v in entry.targets if v not in offline]
        for v in delivered:
            sent.append(Transmission(tick.index, u, v, entry.model))
        entry.targets = tuple(v for v in entry.targets if v in offline)
        if not entry.targets:
            st.queue.popleft()
    # ``sent`` is ordered by sender id, which fixes the arrival order
    for tx in sent:
        rcv = new[tx.receiver]
        if tx.model.key in rcv.store:
            continue
        rcv.store[tx.model.key] = tx.model
        onward = tuple(v for v in rcv.neighbors if v != tx.sender)
        if onward:
            rcv.queue.append(QueueEntry(tx.model, tx.sender, onward))
    return new, sent


def retransmit_after_disruption(states: Mapping[int, GossipNodeState], disrupted: Iterable[int],
                                tick: SlotTick) -> dict[int, GossipNodeState]:
    return step_slot(states, tick, disrupted)[0]


@dataclass
class SlotRecord:
    tick: SlotTick
    transmissions: list[Transmission]
    queues: dict[int, tuple[int, ...]]
    stores: dict[int, tuple[int, ...]]


@dataclass
class GossipTrace:
    schedule: Schedule
    models: dict[int, ModelRef]
    records: list[SlotRecord]

    @property
    def n_slots(self) -> int:
        return len(self.records)

    @property
    def transmissions(self) -> list[Transmission]:
        return [tx for rec in self.records for tx in rec.transmissions]

    @property
    def message_count(self) -> int:
        return sum(len(rec.transmissions) for rec in self.records)

    def cell(self, slot: int, node: int) -> str:
        """One Table-1 style cell: held models, pending ones in lower case.

        Only meaningful for single-letter labels; see :meth:`render_table`
        for the general form.
        """
        rec = self.records[slot - 1]
        labels = self.schedule.labels
        pending = set(rec.queues[node])
        return "".join(labels[o].lower() if o in pending else labels[o] for o in rec.stores[node])

    def to_jsonl(self) -> str:
        labels = self.schedule.labels
        lines = []
        for rec in self.records:
            lines.append(json.dumps({
                "slot": rec.tick.index,
                "color": rec.tick.color.value,
                "transmissions": [[labels[t.sender], labels[t.receiver], labels[t.model.owner]]
                                  for t in rec.transmissions],
                "queues": {labels[u]: [labels[o] for o in q] for u, q in rec.queues.items()},
                "stores": {labels[u]: [labels[o] for o in s] for u, s in rec.stores.items()},
            }, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")

    def render_table(self) -> str:
        """Text table, one row per slot; ``*`` marks models still pending."""
        labels = self.schedule.labels
        n = self.schedule.n
        head = ["slot", "color"] + [f"{labels[u]}({self.schedule.coloring[u].value[0].upper()})" for u in range(n)]
        rows = [head]
        for rec in self.records:
            row = [str(rec.tick.index), rec.tick.color.value]
            for u in range(n):
                pending = set(rec.queues[u])
                row.append(" ".join(labels[o] + ("*" if o in pending else "") for o in rec.stores[u]))
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def _snapshot(states: Mapping[int, GossipNodeState]) -> tuple[dict, dict]:
    return ({u: st.queued_owners() for u, st in states.items()},
            {u: st.stored_owners() for u, st in states.items()})


def run_round(schedule: Schedule, models: Mapping[int, ModelRef] | None = None,
              disruptions: Mapping[int, Iterable[int]] | None = None,
              max_slots: int | None = None) -> GossipTrace:
    """Run slots until every node holds every model.

    ``disruptions`` maps a slot index to the nodes offline during it.
    """
    n = schedule.n
    models = dict(models) if models is not None else default_models(n, schedule.slot.model_size_mb)
    disruptions = disruptions or {}
    limit = max_slots if max_slots is not None else 4 * n * n
    states = init_round(schedule, models)
    records: list[SlotRecord] = []
    index = 0
    while any(len(st.store) < n for st in states.values()):
        index += 1
        if index > limit:
            raise NonTermination(f"round did not finish within {limit} slots")
        tick = SlotTick(index)
        states, sent = step_slot(states, tick, disruptions.get(index, ()))
        records.append(SlotRecord(tick, sent, *_snapshot(states)))
    leftover = {u: st.queued_owners() for u, st in states.items() if st.queue}
    if leftover:
        raise InconsistentState(f"round finished with non-empty queues: {leftover}")
    return GossipTrace(schedule, models, records)


# -- flooding baseline ------------------------------------------------------

@dataclass(frozen=True)
class FloodTransmission:
    sender: int
    receiver: int
    model: ModelRef
    hop: int
    parent: int | None  # index of the transmission that first brought the model to ``sender``


@dataclass
class FloodTrace:
    graph: WeightedGraph
    models: dict[int, ModelRef]
    transmissions: list[FloodTransmission]

    @property
    def message_count(self) -> int:
        return len(self.transmissions)


def flood_round(graph: WeightedGraph, models: Mapping[int, ModelRef] | None = None) -> FloodTrace:
    """Naive flooding, resolved hop by hop.

    Every origin sends to all neighbours at hop 1. A node forwards a model
    once, on the hop after it first saw it, to every neighbour except the one
    that delivered it; later copies are dropped. Among copies arriving on the
    same hop the lowest sender counts as first.
    """
    models = dict(models) if models is not None else default_models(graph.n)
    out: list[FloodTransmission] = []
    for owner in sorted(models):
        model = models[owner]
        seen = {owner}
        # (node, came_from, parent index) due to forward on the next hop
        wave = [(owner, SELF, None)]
        hop = 0
        while wave:
            hop += 1
            arrivals = []
            for u, came_from, parent in wave:
                for v in graph.neighbors(u):
                    if v == came_from:
                        continue
                    out.append(FloodTransmission(u, v, model, hop, parent))
                    arrivals.append((v, u, len(out) - 1))
            wave = []
            for v, u, idx in sorted(arrivals, key=lambda a: (a[0], a[1])):
                if v not in seen:
                    seen.add(v)
                    wave.append((v, u, idx))
    return FloodTrace(graph, models, out)
