import random

from gossipmesh.graph import WeightedGraph, bfs_two_coloring, prim_mst
from gossipmesh.protocol import make_schedule

from oracles import random_tree_edges


def tree_schedule(n, seed, model_size=1.0, root=0):
    rng = random.Random(seed)
    g = WeightedGraph.from_edges(n, random_tree_edges(rng, n))
    tree = prim_mst(g)
    return make_schedule(g, tree, bfs_two_coloring(tree, root), model_size, 1000)


def path_graph(costs):
    return WeightedGraph.from_edges(len(costs) + 1, [(i, i + 1, c) for i, c in enumerate(costs)])
