"""Weighted graphs and the moderator's graph algorithms.

Nodes are the integers ``0..n-1``; each carries a display label. Edge costs
are ping latencies in milliseconds. Everything here is immutable once built.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import DisconnectedGraph, InvalidGraph, NonPositiveInput

Edge = tuple[int, int, float]

DEFAULT_PING_SIZE = 64  # bytes, a standard ICMP echo payload


class _NoLink:
    """Marker for an absent edge in an :class:`AdjacencyMatrix`."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NO_LINK"

    def __bool__(self) -> bool:
        return False

    def __reduce__(self):
        return (_NoLink, ())


NO_LINK = _NoLink()


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.components = n

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        self.components -= 1
        return True


def _norm(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected simple graph with strictly positive edge costs.

    ``edges`` is normalised on construction: every edge is stored as
    ``(u, v, cost)`` with ``u < v`` and the tuple is sorted.
    """

    n: int
    edges: tuple[Edge, ...] = ()
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 0:
            raise InvalidGraph(f"node count must be non-negative, got {self.n}")
        labels = tuple(str(x) for x in self.labels) or tuple(str(i) for i in range(self.n))
        if len(labels) != self.n:
            raise InvalidGraph(f"{len(labels)} labels for {self.n} nodes")
        if len(set(labels)) != self.n:
            raise InvalidGraph("node labels must be unique")
        seen = set()
        normalised = []
        for u, v, cost in self.edges:
            u, v, cost = int(u), int(v), float(cost)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InvalidGraph(f"edge ({u}, {v}) references a missing node")
            if u == v:
                raise InvalidGraph(f"self-loop on node {u}")
            if not cost > 0:
                raise InvalidGraph(f"edge ({u}, {v}) has non-positive cost {cost}")
            key = _norm(u, v)
            if key in seen:
                raise InvalidGraph(f"duplicate edge {key}")
            seen.add(key)
            normalised.append((*key, cost))
        normalised.sort()
        object.__setattr__(self, "edges", tuple(normalised))
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence], labels: Sequence[str] = ()) -> "WeightedGraph":
        return cls(n, tuple(tuple(e) for e in edges), tuple(labels))

    @cached_property
    def _adj(self) -> dict[int, dict[int, float]]:
        adj: dict[int, dict[int, float]] = {u: {} for u in range(self.n)}
        for u, v, c in self.edges:
            adj[u][v] = c
            adj[v][u] = c
        return adj

    @property
    def nodes(self) -> range:
        return range(self.n)

    def neighbors(self, u: int) -> tuple[int, ...]:
        return tuple(sorted(self._adj[u]))

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def cost(self, u: int, v: int) -> float:
        try:
            return self._adj[u][v]
        except KeyError:
            raise KeyError(f"no edge between {u} and {v}") from None

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @property
    def total_weight(self) -> float:
        return sum(c for _, _, c in self.edges)

    def components(self) -> list[list[int]]:
        """Connected components, each sorted, ordered by smallest member."""
        uf = UnionFind(self.n)
        for u, v, _ in self.edges:
            uf.union(u, v)
        groups: dict[int, list[int]] = {}
        for u in range(self.n):
            groups.setdefault(uf.find(u), []).append(u)
        return sorted(groups.values(), key=lambda g: g[0])

    def is_connected(self) -> bool:
        return self.n <= 1 or len(self.components()) == 1

    def with_costs(self, costs: Mapping[tuple[int, int], float]) -> "WeightedGraph":
        return WeightedGraph(self.n, tuple((u, v, costs[(u, v)]) for u, v, _ in self.edges), self.labels)

    def to_dict(self) -> dict:
        return {"n": self.n, "labels": list(self.labels), "edges": [[u, v, c] for u, v, c in self.edges]}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "WeightedGraph":
        return cls.from_edges(int(doc["n"]), doc.get("edges", []), doc.get("labels", ()))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Symmetric cost matrix; absent links hold :data:`NO_LINK`."""

    rows: tuple[tuple, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.rows)
        rows = tuple(tuple(NO_LINK if x is None or x is NO_LINK else float(x) for x in r) for r in self.rows)
        for i, r in enumerate(rows):
            if len(r) != n:
                raise InvalidGraph("adjacency matrix must be square")
            if r[i] is NO_LINK or r[i] != 0.0:
                raise InvalidGraph(f"diagonal entry {i} must be zero")
        for i in range(n):
            for j in range(i + 1, n):
                a, b = rows[i][j], rows[j][i]
                if (a is NO_LINK) != (b is NO_LINK) or (a is not NO_LINK and a != b):
                    raise InvalidGraph(f"matrix is not symmetric at ({i}, {j})")
                if a is not NO_LINK and not a > 0:
                    raise InvalidGraph(f"non-positive cost at ({i}, {j})")
        labels = tuple(self.labels) or tuple(str(i) for i in range(n))
        if len(labels) != n:
            raise InvalidGraph(f"{len(labels)} labels for a {n}x{n} matrix")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij: tuple[int, int]):
        i, j = ij
        return self.rows[i][j]

    def has_link(self, i: int, j: int) -> bool:
        return i != j and self.rows[i][j] is not NO_LINK

    def to_graph(self) -> WeightedGraph:
        edges = [
            (i, j, self.rows[i][j])
            for i in range(self.n)
            for j in range(i + 1, self.n)
            if self.rows[i][j] is not NO_LINK
        ]
        return WeightedGraph.from_edges(self.n, edges, self.labels)

    def to_list(self) -> list[list]:
        return [[None if x is NO_LINK else x for x in r] for r in self.rows]


def build_adjacency(graph: WeightedGraph) -> AdjacencyMatrix:
    rows = [[NO_LINK] * graph.n for _ in range(graph.n)]
    for i in range(graph.n):
        rows[i][i] = 0.0
    for u, v, c in graph.edges:
        rows[u][v] = rows[v][u] = c
    return AdjacencyMatrix(tuple(tuple(r) for r in rows), graph.labels)


@dataclass(frozen=True)
class SpanningTree:
    graph: WeightedGraph
    edges: tuple[Edge, ...]

    def __post_init__(self):
        g = self.graph
        edges = tuple(sorted((*_norm(u, v), float(c)) for u, v, c in self.edges))
        if len(edges) != max(g.n - 1, 0):
            raise InvalidGraph(f"a spanning tree on {g.n} nodes needs {g.n - 1} edges, got {len(edges)}")
        uf = UnionFind(g.n)
        for u, v, c in edges:
            if not g.has_edge(u, v) or g.cost(u, v) != c:
                raise InvalidGraph(f"tree edge ({u}, {v}, {c}) is not in the parent graph")
            if not uf.union(u, v):
                raise InvalidGraph(f"tree edge ({u}, {v}) closes a cycle")
        object.__setattr__(self, "edges", edges)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def labels(self) -> tuple[str, ...]:
        return self.graph.labels

    @cached_property
    def as_graph(self) -> WeightedGraph:
        return WeightedGraph(self.graph.n, self.edges, self.graph.labels)

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self.as_graph.neighbors(u)

    def degree(self, u: int) -> int:
        return self.as_graph.degree(u)

    def cost(self, u: int, v: int) -> float:
        return self.as_graph.cost(u, v)

    @property
    def weight(self) -> float:
        return sum(c for _, _, c in self.edges)


def prim_mst(graph: WeightedGraph, root: int = 0) -> SpanningTree:
    """Prim's algorithm with a binary heap.

    Ties between equal-cost frontier edges go to the lexicographically
    smallest normalised ``(u, v)`` pair, so the result is deterministic.
    """
    if graph.n == 0:
        return SpanningTree(graph, ())
    if not 0 <= root < graph.n:
        raise InvalidGraph(f"root {root} is not a node")
    in_tree = [False] * graph.n
    in_tree[root] = True
    frontier: list[tuple[float, int, int, int]] = []

    def push_from(u: int) -> None:
        for v in graph.neighbors(u):
            if not in_tree[v]:
                a, b = _norm(u, v)
                heapq.heappush(frontier, (graph.cost(u, v), a, b, v))

    push_from(root)
    chosen: list[Edge] = []
    while frontier and len(chosen) < graph.n - 1:
        cost, a, b, v = heapq.heappop(frontier)
        if in_tree[v]:
            continue
        in_tree[v] = True
        chosen.append((a, b, cost))
        push_from(v)
    if len(chosen) != graph.n - 1:
        missing = [graph.labels[i] for i in range(graph.n) if not in_tree[i]]
        raise DisconnectedGraph(f"graph is disconnected; unreachable from root: {missing}")
    return SpanningTree(graph, tuple(chosen))


class Color(str, Enum):
    RED = "red"
    BLUE = "blue"

    @property
    def other(self) -> "Color":
        return Color.BLUE if self is Color.RED else Color.RED


@dataclass(frozen=True)
class TwoColoring:
    colors: tuple[Color, ...]

    def __getitem__(self, u: int) -> Color:
        return self.colors[u]

    def __len__(self) -> int:
        return len(self.colors)

    def members(self, color: Color) -> tuple[int, ...]:
        return tuple(u for u, c in enumerate(self.colors) if c is color)

    def swapped(self) -> "TwoColoring":
        return TwoColoring(tuple(c.other for c in self.colors))


def bfs_two_coloring(tree: SpanningTree, root: int = 0) -> TwoColoring:
    """Colour the root red and alternate colours level by level."""
    if tree.n == 0:
        return TwoColoring(())
    colors: list[Color | None] = [None] * tree.n
    colors[root] = Color.RED
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in tree.neighbors(u):
            if colors[v] is None:
                colors[v] = colors[u].other
                queue.append(v)
    if any(c is None for c in colors):
        raise InvalidGraph("tree is not spanning")
    return TwoColoring(tuple(colors))


@dataclass(frozen=True)
class SlotLength:
    seconds: float
    ping_max_ms: float
    model_size_mb: float
    ping_size_bytes: float


def slot_length(ping_max: float, model_size: float, ping_size: float = DEFAULT_PING_SIZE) -> SlotLength:
    """Length in seconds of one colour slot.

    The ping latency measured for ``ping_size`` bytes is extrapolated per
    byte to a ``model_size`` megabyte payload; the factor 1000 folds the
    MB-to-byte and ms-to-s conversions together.
    """
    for name, value in (("ping_max", ping_max), ("model_size", model_size), ("ping_size", ping_size)):
        if not value > 0:
            raise NonPositiveInput(f"{name} must be strictly positive, got {value}")
    seconds = ping_max * model_size * 1000 / ping_size
    return SlotLength(seconds, float(ping_max), float(model_size), float(ping_size))


def max_ping_per_color(matrix: AdjacencyMatrix, tree: SpanningTree, coloring: TwoColoring) -> dict[Color, float]:
    """Per colour class, the largest ping any member has to a tree neighbour."""
    worst = {Color.RED: 0.0, Color.BLUE: 0.0}
    for u in range(tree.n):
        pings = [matrix[u, v] for v in tree.neighbors(u)]
        if pings:
            c = coloring[u]
            worst[c] = max(worst[c], max(pings))
    return worst


def max_ping(matrix: AdjacencyMatrix, tree: SpanningTree, coloring: TwoColoring) -> float:
    return max(max_ping_per_color(matrix, tree, coloring).values())
