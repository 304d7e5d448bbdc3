"""Underlay topology generators and subnet-based cost assignment."""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations

from .errors import InvalidParams
from .graph import WeightedGraph

KINDS = ("complete", "er", "ws", "ba")

_ALIASES = {
    "complete": "complete",
    "k": "complete",
    "er": "er",
    "erdos_renyi": "er",
    "ws": "ws",
    "watts_strogatz": "ws",
    "ba": "ba",
    "barabasi_albert": "ba",
}

_DEFAULTS = {
    "complete": {},
    "er": {"p": 0.3},
    "ws": {"k": 4, "beta": 0.2},
    "ba": {"m": 2},
}

DISPLAY_NAMES = {
    "er": "Erdos-Renyi",
    "ws": "Watts-Strogatz",
    "ba": "Barabasi-Albert",
    "complete": "Complete",
}


@dataclass(frozen=True)
class TopologyKind:
    name: str
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.name not in KINDS:
            raise InvalidParams(f"unknown topology kind {self.name!r}; expected one of {KINDS}")
        merged = dict(_DEFAULTS[self.name])
        for key, value in self.params:
            if key not in merged:
                raise InvalidParams(f"topology {self.name!r} has no parameter {key!r}")
            merged[key] = value
        if self.name == "er":
            merged["p"] = float(merged["p"])
        elif self.name == "ws":
            merged["k"] = _as_int(merged["k"], "k")
            merged["beta"] = float(merged["beta"])
        elif self.name == "ba":
            merged["m"] = _as_int(merged["m"], "m")
        object.__setattr__(self, "params", tuple(sorted(merged.items())))

    def __getitem__(self, key: str):
        return dict(self.params)[key]

    @classmethod
    def complete(cls) -> "TopologyKind":
        return cls("complete")

    @classmethod
    def erdos_renyi(cls, p: float = 0.3) -> "TopologyKind":
        return cls("er", (("p", p),))

    @classmethod
    def watts_strogatz(cls, k: int = 4, beta: float = 0.2) -> "TopologyKind":
        return cls("ws", (("k", k), ("beta", beta)))

    @classmethod
    def barabasi_albert(cls, m: int = 2) -> "TopologyKind":
        return cls("ba", (("m", m),))

    @property
    def spec(self) -> str:
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(f"{k}={v:g}" for k, v in self.params)

    def validate(self, n: int) -> None:
        if n < 2:
            raise InvalidParams(f"need at least 2 nodes, got {n}")
        if self.name == "er" and not 0 <= self["p"] <= 1:
            raise InvalidParams(f"p must lie in [0, 1], got {self['p']}")
        if self.name == "ws":
            k, beta = self["k"], self["beta"]
            if k < 2 or k % 2 or k >= n:
                raise InvalidParams(f"k must be even with 2 <= k < n, got k={k}, n={n}")
            if not 0 <= beta <= 1:
                raise InvalidParams(f"beta must lie in [0, 1], got {beta}")
        if self.name == "ba" and not 1 <= self["m"] < n:
            raise InvalidParams(f"m must satisfy 1 <= m < n, got m={self['m']}, n={n}")


def _as_int(value, name: str) -> int:
    if float(value) != int(float(value)):
        raise InvalidParams(f"{name} must be an integer, got {value}")
    return int(float(value))


def parse_topology(text: str) -> TopologyKind:
    """Parse ``complete``, ``er:p=0.3``, ``ws:k=4,beta=0.2`` or ``ba:m=2``."""
    head, _, tail = text.strip().partition(":")
    name = _ALIASES.get(head.strip().lower())
    if name is None:
        raise InvalidParams(f"unknown topology {head!r}")
    params = []
    for item in filter(None, (s.strip() for s in tail.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise InvalidParams(f"malformed topology parameter {item!r}")
        try:
            params.append((key.strip(), float(value)))
        except ValueError:
            raise InvalidParams(f"parameter {key!r} is not numeric: {value!r}") from None
    return TopologyKind(name, tuple(params))


def _complete(n: int, rng: random.Random) -> set[tuple[int, int]]:
    return set(combinations(range(n), 2))


def _erdos_renyi(n: int, p: float, rng: random.Random) -> set[tuple[int, int]]:
    return {(u, v) for u, v in combinations(range(n), 2) if rng.random() < p}


def _watts_strogatz(n: int, k: int, beta: float, rng: random.Random) -> set[tuple[int, int]]:
    adj = {u: set() for u in range(n)}
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    # rewire each lattice edge (u, u+j) independently, keeping u as anchor
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if rng.random() >= beta or v not in adj[u]:
                continue
            choices = [w for w in range(n) if w != u and w not in adj[u]]
            if not choices:
                continue
            w = rng.choice(choices)
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    return {(u, v) for u in adj for v in adj[u] if u < v}


def _barabasi_albert(n: int, m: int, rng: random.Random) -> set[tuple[int, int]]:
    edges = set(combinations(range(m), 2))
    # one entry per edge endpoint, so sampling from it is degree-proportional
    endpoints = [x for e in edges for x in e]
    for new in range(m, n):
        targets: set[int] = set()
        while len(targets) < m:
            pool = [x for x in endpoints if x not in targets]
            if pool:
                targets.add(rng.choice(pool))
            else:
                targets.add(rng.choice([x for x in range(new) if x not in targets]))
        for t in sorted(targets):
            edges.add((t, new))
            endpoints.extend((t, new))
    return edges


def generate(kind: TopologyKind, n: int, seed: int, labels: tuple[str, ...] = ()) -> WeightedGraph:
    """Generate a connected unit-cost graph of the requested family."""
    kind.validate(n)
    rng = random.Random(seed)
    if kind.name == "complete":
        edges = _complete(n, rng)
    elif kind.name == "er":
        edges = _erdos_renyi(n, kind["p"], rng)
    elif kind.name == "ws":
        edges = _watts_strogatz(n, kind["k"], kind["beta"], rng)
    else:
        edges = _barabasi_albert(n, kind["m"], rng)
    graph = WeightedGraph.from_edges(n, [(u, v, 1.0) for u, v in sorted(edges)], labels)
    return ensure_connected(graph, seed)


def ensure_connected(graph: WeightedGraph, seed: int, cost: float = 1.0) -> WeightedGraph:
    """Chain the components together with one bridge edge each.

    Components are ordered by their smallest node and each is joined to the
    next through a seeded random member of each side. A connected input is
    returned as is.
    """
    comps = graph.components()
    if len(comps) <= 1:
        return graph
    rng = random.Random(f"bridge:{seed}")
    bridges = []
    for left, right in zip(comps, comps[1:]):
        bridges.append((rng.choice(left), rng.choice(right), cost))
    return WeightedGraph(graph.n, graph.edges + tuple(bridges), graph.labels)


@dataclass(frozen=True)
class SubnetAssignment:
    """Which router each node hangs off, plus the latency model.

    Intra-subnet pings are uniform in ``intra_cost_range`` (ms); a link that
    crosses routers costs an intra draw times a multiplier drawn from
    ``inter_multiplier_range``.
    """

    subnet_of: tuple[int, ...]
    intra_cost_range: tuple[float, float] = (0.2, 1.0)
    inter_multiplier_range: tuple[float, float] = (10.0, 60.0)

    def __post_init__(self):
        lo, hi = self.intra_cost_range
        if not 0 < lo <= hi:
            raise InvalidParams(f"intra cost range must satisfy 0 < lo <= hi, got {self.intra_cost_range}")
        mlo, mhi = self.inter_multiplier_range
        if not 0 < mlo <= mhi:
            raise InvalidParams(f"multiplier range must satisfy 0 < lo <= hi, got {self.inter_multiplier_range}")
        if any(s < 0 for s in self.subnet_of):
            raise InvalidParams("subnet indices must be non-negative")

    @classmethod
    def even(cls, n: int, subnets: int = 3, **ranges) -> "SubnetAssignment":
        """Contiguous, as-even-as-possible blocks (4/3/3 for ten nodes)."""
        if subnets < 1:
            raise InvalidParams("need at least one subnet")
        base, extra = divmod(n, subnets)
        out = []
        for s in range(subnets):
            out.extend([s] * (base + (1 if s < extra else 0)))
        return cls(tuple(out), **ranges)

    @property
    def n_subnets(self) -> int:
        return max(self.subnet_of, default=-1) + 1

    def same_subnet(self, u: int, v: int) -> bool:
        return self.subnet_of[u] == self.subnet_of[v]

    def to_dict(self) -> dict:
        return {
            "subnet_of": list(self.subnet_of),
            "intra_cost_range": list(self.intra_cost_range),
            "inter_multiplier_range": list(self.inter_multiplier_range),
        }


def assign_costs(graph: WeightedGraph, subnets: SubnetAssignment, seed: int) -> WeightedGraph:
    if len(subnets.subnet_of) != graph.n:
        raise InvalidParams(f"subnet map covers {len(subnets.subnet_of)} nodes, graph has {graph.n}")
    rng = random.Random(f"costs:{seed}")
    lo, hi = subnets.intra_cost_range
    mlo, mhi = subnets.inter_multiplier_range
    costs = {}
    for u, v, _ in graph.edges:
        cost = rng.uniform(lo, hi)
        if not subnets.same_subnet(u, v):
            cost *= rng.uniform(mlo, mhi)
        costs[(u, v)] = cost
    return graph.with_costs(costs)
