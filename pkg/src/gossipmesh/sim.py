"""Flow-level discrete-event simulation of a gossip or flooding round.

Every transmission becomes a fluid transfer through a short resource path:
the sender's uplink, the trunk between the two routers when the endpoints
sit in different subnets, and the receiver's downlink. Rates are the max-min
fair allocation over all active transfers and are recomputed whenever a
transfer starts or finishes.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Mapping, Sequence

from .errors import CapacityMisconfig, InvalidParams
from .gossip import FloodTrace, GossipTrace, ModelRef
from .topology import SubnetAssignment

SLOT_POLICIES = ("adaptive", "grid")

ResourceId = tuple


class ResourceKind(str, Enum):
    UPLINK = "uplink"
    DOWNLINK = "downlink"
    TRUNK = "trunk"


@dataclass(frozen=True)
class Resource:
    kind: ResourceKind
    key: tuple
    capacity: float

    @property
    def id(self) -> ResourceId:
        return (self.kind.value, *self.key)


@dataclass(frozen=True)
class UnderlayConfig:
    """Node-to-router mapping and link capacities in MB/s."""

    subnets: SubnetAssignment
    uplink: float = 10.0
    downlink: float = 10.0
    trunk: float = 20.0

    @property
    def n(self) -> int:
        return len(self.subnets.subnet_of)

    def resources(self) -> list[Resource]:
        out = [Resource(ResourceKind.UPLINK, (u,), self.uplink) for u in range(self.n)]
        out += [Resource(ResourceKind.DOWNLINK, (u,), self.downlink) for u in range(self.n)]
        k = self.subnets.n_subnets
        out += [Resource(ResourceKind.TRUNK, (a, b), self.trunk) for a in range(k) for b in range(a + 1, k)]
        return out

    def capacities(self) -> dict[ResourceId, float]:
        return {r.id: r.capacity for r in self.resources()}

    def path(self, u: int, v: int) -> tuple[ResourceId, ...]:
        su, sv = self.subnets.subnet_of[u], self.subnets.subnet_of[v]
        if su == sv:
            return (("uplink", u), ("downlink", v))
        return (("uplink", u), ("trunk", min(su, sv), max(su, sv)), ("downlink", v))

    def scaled(self, factor: float) -> "UnderlayConfig":
        return UnderlayConfig(self.subnets, self.uplink * factor, self.downlink * factor, self.trunk * factor)

    def to_dict(self) -> dict:
        return {"subnets": self.subnets.to_dict(), "uplink": self.uplink,
                "downlink": self.downlink, "trunk": self.trunk}


def allocate_rates(paths: Mapping[Hashable, Sequence[Hashable]],
                   capacities: Mapping[Hashable, float]) -> dict[Hashable, float]:
    """Max-min fair rates by progressive filling.

    The resource offering the smallest equal share to its still-unfrozen
    flows is saturated first; those flows are frozen at that share and the
    process repeats on what capacity is left. Ties between resources go to
    the smallest resource id.
    """
    for rid, cap in capacities.items():
        if not cap > 0:
            raise CapacityMisconfig(f"resource {rid} has non-positive capacity {cap}")
    remaining: dict = {}
    members: dict = defaultdict(set)
    rates: dict = {}
    for fid, path in paths.items():
        if not path:
            rates[fid] = math.inf
            continue
        for rid in path:
            if rid not in capacities:
                raise CapacityMisconfig(f"flow {fid!r} crosses unknown resource {rid!r}")
            remaining[rid] = capacities[rid]
            members[rid].add(fid)
    order = sorted(members)
    while True:
        best, best_share = None, math.inf
        for rid in order:
            count = len(members[rid])
            if count:
                share = remaining[rid] / count
                if best is None or share < best_share:
                    best, best_share = rid, share
        if best is None:
            break
        frozen = members[best]
        members[best] = set()
        for fid in frozen:
            rates[fid] = best_share
            for rid in paths[fid]:
                if rid != best:
                    members[rid].discard(fid)
                    remaining[rid] = max(remaining[rid] - best_share, 0.0)
        remaining[best] = 0.0
    return rates


@dataclass
class Transfer:
    sender: int
    receiver: int
    model: ModelRef
    size: float
    path: tuple[ResourceId, ...]
    slot: int = 1
    parent: int | None = None  # transfer that delivered the model to ``sender``
    start: float = math.nan
    finish: float = math.nan
    delivered: float = 0.0

    @property
    def duration(self) -> float:
        return self.finish - self.start


@dataclass(frozen=True)
class RoundMetrics:
    effective_bandwidth: float  # MB/s, mean of size/duration
    mean_single_transfer: float  # s
    total_round_time: float  # s
    message_count: int

    def to_dict(self) -> dict:
        return {
            "bandwidth_mbps": self.effective_bandwidth,
            "mean_transfer_s": self.mean_single_transfer,
            "total_round_s": self.total_round_time,
            "messages": self.message_count,
        }


def transfers_for(trace: GossipTrace | FloodTrace, underlay: UnderlayConfig) -> list[Transfer]:
    if isinstance(trace, FloodTrace):
        return [Transfer(t.sender, t.receiver, t.model, t.model.size, underlay.path(t.sender, t.receiver),
                         1, t.parent) for t in trace.transmissions]
    out: list[Transfer] = []
    brought_by: dict[tuple[int, tuple], int] = {}
    for tx in trace.transmissions:
        parent = brought_by.get((tx.sender, tx.model.key))
        out.append(Transfer(tx.sender, tx.receiver, tx.model, tx.model.size,
                            underlay.path(tx.sender, tx.receiver), tx.slot, parent))
        brought_by.setdefault((tx.receiver, tx.model.key), len(out) - 1)
    return out


def run_transfers(transfers: list[Transfer], capacities: Mapping[ResourceId, float], n_slots: int = 1,
                  slot_seconds: float = 0.0, policy: str = "adaptive") -> float:
    """Execute ``transfers`` in place and return the time the round ends.

    A transfer starts once its slot is open and its parent has finished.
    Under ``grid`` slot ``k`` opens at ``(k-1) * slot_seconds`` whatever is
    still in flight. Under ``adaptive`` it opens as soon as every transfer of
    slot ``k-1`` has finished, but never later than ``slot_seconds`` after
    slot ``k-1`` opened.
    """
    if policy not in SLOT_POLICIES:
        raise InvalidParams(f"unknown slot policy {policy!r}")
    for rid, cap in capacities.items():
        if not cap > 0:
            raise CapacityMisconfig(f"resource {rid} has non-positive capacity {cap}")
    by_slot: dict[int, list[int]] = defaultdict(list)
    children: dict[int, list[int]] = defaultdict(list)
    for i, tr in enumerate(transfers):
        by_slot[tr.slot].append(i)
        if tr.parent is not None:
            children[tr.parent].append(i)
    unfinished_in_slot = {k: len(v) for k, v in by_slot.items()}
    done = [False] * len(transfers)
    remaining: dict[int, float] = {}
    rates: dict[int, float] = {}
    now = 0.0
    current = 0
    opened_at = 0.0
    dirty = False

    def release(i: int) -> None:
        nonlocal dirty
        transfers[i].start = now
        remaining[i] = transfers[i].size
        dirty = True

    def open_slot() -> None:
        nonlocal current, opened_at
        current += 1
        opened_at = now
        for i in by_slot.get(current, ()):
            p = transfers[i].parent
            if p is None or done[p]:
                release(i)

    def complete(i: int) -> None:
        nonlocal dirty
        tr = transfers[i]
        tr.finish = now
        done[i] = True
        del remaining[i]
        unfinished_in_slot[tr.slot] -= 1
        dirty = True
        for c in children.get(i, ()):
            if transfers[c].slot <= current:
                release(c)

    open_slot()
    while True:
        if dirty:
            rates = allocate_rates({i: transfers[i].path for i in remaining}, capacities)
            dirty = False
        instant = [i for i in remaining if math.isinf(rates[i])]
        if instant:
            for i in sorted(instant):
                transfers[i].delivered = transfers[i].size
                complete(i)
            continue
        next_open = math.inf
        if current < n_slots:
            if policy == "grid":
                next_open = current * slot_seconds
            elif unfinished_in_slot.get(current, 0) == 0:
                next_open = now
            else:
                next_open = opened_at + slot_seconds
        ttf = {i: remaining[i] / rates[i] for i in remaining}
        soonest = min(ttf.values(), default=math.inf)
        next_finish = now + soonest
        t = min(next_open, next_finish)
        if math.isinf(t):
            break
        dt = max(t - now, 0.0)
        for i in remaining:
            moved = rates[i] * dt
            remaining[i] -= moved
            transfers[i].delivered += moved
        now = max(now, t)
        finishing = [i for i in remaining
                     if ttf[i] <= dt or remaining[i] <= 1e-12 * transfers[i].size
                     or (next_finish <= next_open and ttf[i] == soonest)]
        for i in sorted(finishing):
            transfers[i].delivered += remaining[i]
            remaining[i] = 0.0
            complete(i)
        if current < n_slots and next_open <= now:
            open_slot()
    if not all(done):
        stuck = sum(1 for d in done if not d)
        raise InvalidParams(f"{stuck} transfers never became runnable")
    end = max((tr.finish for tr in transfers), default=0.0)
    if policy == "grid":
        end = max(end, n_slots * slot_seconds)
    return end


def metrics_for(transfers: Sequence[Transfer], round_time: float) -> RoundMetrics:
    if not transfers:
        return RoundMetrics(0.0, 0.0, round_time, 0)
    durations = [tr.duration for tr in transfers]
    bw = [tr.size / d if d > 0 else math.inf for tr, d in zip(transfers, durations)]
    return RoundMetrics(math.fsum(bw) / len(bw), math.fsum(durations) / len(durations),
                        round_time, len(transfers))


def execute(trace: GossipTrace | FloodTrace, underlay: UnderlayConfig,
            policy: str = "adaptive") -> tuple[list[Transfer], float]:
    transfers = transfers_for(trace, underlay)
    caps = underlay.capacities()
    if isinstance(trace, FloodTrace):
        end = run_transfers(transfers, caps)
    else:
        end = run_transfers(transfers, caps, trace.n_slots, trace.schedule.slot.seconds, policy)
    return transfers, end


def simulate(trace: GossipTrace | FloodTrace, underlay: UnderlayConfig, policy: str = "adaptive") -> RoundMetrics:
    """Run one round over the underlay and summarise it."""
    transfers, end = execute(trace, underlay, policy)
    return metrics_for(transfers, end)
