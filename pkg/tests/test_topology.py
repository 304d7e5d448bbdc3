import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gossipmesh.errors import InvalidParams
from gossipmesh.graph import WeightedGraph
from gossipmesh.topology import (
    SubnetAssignment,
    TopologyKind,
    assign_costs,
    ensure_connected,
    generate,
    parse_topology,
)

ALL_KINDS = [
    TopologyKind.complete(),
    TopologyKind.erdos_renyi(0.3),
    TopologyKind.watts_strogatz(4, 0.2),
    TopologyKind.barabasi_albert(2),
]


def union_find_connected(g: WeightedGraph) -> bool:
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for u, v, _ in g.edges:
        parent[find(u)] = find(v)
    return len({find(u) for u in range(g.n)}) == 1


def test_complete_edge_count():
    assert len(generate(TopologyKind.complete(), 10, 0).edges) == 45


@pytest.mark.parametrize("seed", range(10))
def test_barabasi_albert_edge_count(seed):
    # clique on m nodes, then m edges per newcomer: C(2,2) + 2*8
    g = generate(TopologyKind.barabasi_albert(2), 10, seed)
    assert len(g.edges) == 1 + 2 * 8


def test_barabasi_albert_is_heavy_tailed():
    g = generate(TopologyKind.barabasi_albert(2), 200, 3)
    degrees = sorted((g.degree(u) for u in g.nodes), reverse=True)
    assert degrees[0] >= 4 * (2 * len(g.edges) / g.n)


def test_erdos_renyi_p_one_is_complete():
    assert len(generate(TopologyKind.erdos_renyi(1.0), 6, 5).edges) == 15


@pytest.mark.parametrize("seed", range(5))
def test_watts_strogatz_beta_zero_is_ring_lattice(seed):
    g = generate(TopologyKind.watts_strogatz(4, 0.0), 12, seed)
    assert all(g.degree(u) == 4 for u in g.nodes)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.spec)
@pytest.mark.parametrize("seed", range(20))
def test_simple_and_connected(kind, seed):
    g = generate(kind, 10, seed)
    pairs = [(u, v) for u, v, _ in g.edges]
    assert all(u < v for u, v in pairs)
    assert len(set(pairs)) == len(pairs)
    assert union_find_connected(g)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.spec)
def test_seed_determinism(kind):
    a = assign_costs(generate(kind, 10, 42), SubnetAssignment.even(10), 42)
    b = assign_costs(generate(kind, 10, 42), SubnetAssignment.even(10), 42)
    assert a.to_json() == b.to_json()


def test_even_split():
    assert SubnetAssignment.even(10).subnet_of == (0, 0, 0, 0, 1, 1, 1, 2, 2, 2)
    assert SubnetAssignment.even(10).n_subnets == 3


def test_one_subnet_degenerate_range():
    g = generate(TopologyKind.complete(), 5, 0)
    out = assign_costs(g, SubnetAssignment((0,) * 5, (1.0, 1.0)), 3)
    assert {c for _, _, c in out.edges} == {1.0}


def test_two_subnets_degenerate_ranges():
    g = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
    out = assign_costs(g, SubnetAssignment((0, 1), (1.0, 1.0), (10.0, 10.0)), 0)
    assert out.cost(0, 1) == 10.0


@pytest.mark.parametrize("seed", range(20))
def test_inter_subnet_costs_dominate(seed):
    subnets = SubnetAssignment.even(10)
    g = assign_costs(generate(TopologyKind.complete(), 10, seed), subnets, seed)
    intra = [c for u, v, c in g.edges if subnets.same_subnet(u, v)]
    inter = [c for u, v, c in g.edges if not subnets.same_subnet(u, v)]
    lo, hi = subnets.intra_cost_range
    assert all(lo <= c <= hi for c in intra)
    assert min(inter) >= 10 * lo
    assert all(c > 0 for _, _, c in g.edges)


def test_ensure_connected_identity():
    g = WeightedGraph.from_edges(3, [(0, 1, 1), (1, 2, 1)])
    assert ensure_connected(g, 7) is g


def test_ensure_connected_two_triangles():
    tri = [(0, 1, 1), (1, 2, 1), (0, 2, 1)]
    g = WeightedGraph.from_edges(6, tri + [(u + 3, v + 3, c) for u, v, c in tri])
    out = ensure_connected(g, 1)
    assert out.is_connected()
    assert len(out.edges) == len(g.edges) + 1


@pytest.mark.parametrize("seed", range(100))
def test_sparse_er_always_connected(seed):
    assert union_find_connected(generate(TopologyKind.erdos_renyi(0.1), 20, seed))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**31))
def test_ensure_connected_chains_isolated_nodes(n, seed):
    out = ensure_connected(WeightedGraph(n), seed)
    assert out.is_connected() and len(out.edges) == n - 1


class TestParse:
    def test_round_trip(self):
        k = parse_topology("ws:k=4,beta=0.2")
        assert k == TopologyKind.watts_strogatz(4, 0.2)
        assert parse_topology(k.spec) == k

    def test_defaults(self):
        assert parse_topology("er") == TopologyKind.erdos_renyi(0.3)

    @pytest.mark.parametrize("text", ["ring", "er:p", "er:p=x", "er:p=1.5", "ws:k=3", "ba:m=0"])
    def test_rejects(self, text):
        with pytest.raises(InvalidParams):
            parse_topology(text).validate(10)

    @pytest.mark.parametrize("kind,n", [(TopologyKind.watts_strogatz(10, 0.1), 10),
                                        (TopologyKind.barabasi_albert(5), 5)])
    def test_parameter_out_of_range_for_n(self, kind, n):
        with pytest.raises(InvalidParams):
            generate(kind, n, 0)
