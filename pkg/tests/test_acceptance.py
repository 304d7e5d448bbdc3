"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (straight to the terminal,
so it shows up without ``-s``) and then asserts.
"""

import random
import time
from itertools import combinations

import pytest

from gossipmesh import reference
from gossipmesh.catalog import MODEL_ORDER
from gossipmesh.cli import main
from gossipmesh.experiment import GRID_TOPOLOGIES, ExperimentConfig, sweep
from gossipmesh.gossip import flood_round, run_round
from gossipmesh.graph import WeightedGraph, bfs_two_coloring, prim_mst, slot_length
from gossipmesh.protocol import ConnectionReport, aggregate_reports
from gossipmesh.sim import allocate_rates

from helpers import tree_schedule
from oracles import brute_force_mst_weight, random_connected_edges, random_tree_edges, waterfill


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail, elapsed, limit):
        ok = ok and elapsed < limit
        line = (f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} | {detail} | "
                f"{elapsed:.2f}s (limit {limit:g}s)")
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return emit


def test_reference_round_replay(report):
    t0 = time.perf_counter()
    trace = run_round(reference.reference_schedule())
    bad = []
    for slot in (1, 2, 3, 23):
        for u, want in enumerate(reference.row_cells(slot)):
            if reference.pending_and_held(trace.cell(slot, u)) != reference.pending_and_held(want):
                bad.append((slot, reference.LABELS[u]))
    elapsed = time.perf_counter() - t0
    ok = trace.n_slots == 23 and trace.message_count == 90 and not bad
    report(1, "reference round replay", ok,
           f"slots={trace.n_slots} transmissions={trace.message_count} mismatched cells={bad}", elapsed, 1)


def test_mst_matches_exhaustive_search(report):
    t0 = time.perf_counter()
    rng = random.Random(2024)
    wrong = 0
    for _ in range(200):
        n = rng.randint(2, 8)
        edges = random_connected_edges(rng, n, rng.randint(n - 1, min(14, n * (n - 1) // 2)),
                                       lambda: rng.randint(1, 20))
        g = WeightedGraph.from_edges(n, edges)
        wrong += prim_mst(g, rng.randrange(n)).weight != brute_force_mst_weight(n, g.edges)
    report(2, "MST equals exhaustive minimum", wrong == 0, f"200 graphs, {wrong} disagreements",
           time.perf_counter() - t0, 30)


def test_two_coloring_properties(report):
    t0 = time.perf_counter()
    rng = random.Random(7)
    bad = 0
    for _ in range(500):
        n = rng.randint(1, 64)
        tree = prim_mst(WeightedGraph.from_edges(n, random_tree_edges(rng, n)))
        c = bfs_two_coloring(tree, rng.randrange(n))
        proper = all(c[u] is not c[v] for u, v, _ in tree.edges)
        bad += not (proper and len(set(c.colors)) == (2 if n >= 2 else 1))
    report(3, "proper two-colouring", bad == 0, f"500 trees, {bad} failures", time.perf_counter() - t0, 5)


def test_message_count_identities(report):
    t0 = time.perf_counter()
    bad = []
    for seed in range(100):
        n = 2 + seed % 49
        got = run_round(tree_schedule(n, seed)).message_count
        if got != n * (n - 1):
            bad.append((n, seed, got))
    flood = {}
    for n in (2, 5, 10):
        kn = WeightedGraph.from_edges(n, [(u, v, 1.0) for u, v in combinations(range(n), 2)])
        flood[n] = flood_round(kn).message_count
    flood_ok = all(flood[n] == n * (n - 1) ** 2 for n in flood)
    ratio = flood[10] / run_round(tree_schedule(10, 0)).message_count
    report(4, "message counts", not bad and flood_ok and ratio == 9,
           f"gossip mismatches={bad} flood K_n={flood} ratio@10={ratio}", time.perf_counter() - t0, 10)


def test_slot_formula(report):
    t0 = time.perf_counter()
    rng = random.Random(5)
    worst = 0.0
    for _ in range(1000):
        ping, size, psize = rng.uniform(1e-3, 100), rng.uniform(1e-2, 100), rng.uniform(1, 1e4)
        base = slot_length(ping, size, psize).seconds
        worst = max(worst,
                    abs(slot_length(ping, 2 * size, psize).seconds / (2 * base) - 1),
                    abs(slot_length(ping, size, 2 * psize).seconds / (base / 2) - 1))
    unit = slot_length(1, 1, 1000).seconds
    report(5, "slot formula", unit == 1.0 and worst <= 1e-12,
           f"slot(1,1,1000)={unit} worst relative linearity error={worst:.2e}", time.perf_counter() - t0, 1)


def test_directional_grid(report):
    t0 = time.perf_counter()
    res = sweep(ExperimentConfig(), GRID_TOPOLOGIES, MODEL_ORDER, seeds=5)
    losses = []
    for topo in GRID_TOPOLOGIES:
        for model in MODEL_ORDER:
            for g, f in zip(res.per_seed[(topo, model, "gossip")], res.per_seed[(topo, model, "flood")]):
                if not (g.total_round_time < f.total_round_time and g.effective_bandwidth > f.effective_bandwidth):
                    losses.append((topo, model))
    factors = {m: res.means[("complete", m, "flood")].total_round_time
               / res.means[("complete", m, "gossip")].total_round_time for m in ("b1", "b2", "b3")}
    b3 = res.means[("complete", "b3", "gossip")].effective_bandwidth, res.means[("complete", "b3", "flood")].effective_bandwidth
    ok = not res.failures and not losses and all(f >= 2 for f in factors.values())
    report(6, "gossip beats flooding on every grid cell", ok,
           f"losing cell-seeds={len(losses)} failures={len(res.failures)} "
           f"complete speedups={ {m: round(f, 3) for m, f in factors.items()} } "
           f"b3 bandwidth gossip/flood={b3[0]:.3f}/{b3[1]:.3f} MB/s", time.perf_counter() - t0, 120)


def test_max_min_fairness(report):
    t0 = time.perf_counter()
    rng = random.Random(11)
    worst = 0.0
    for _ in range(100):
        n_res = rng.randint(1, 5)
        caps = {i: rng.uniform(0.5, 20) for i in range(n_res)}
        paths = {j: tuple(rng.sample(range(n_res), rng.randint(1, n_res))) for j in range(rng.randint(1, 6))}
        got, want = allocate_rates(paths, caps), waterfill(paths, caps)
        worst = max(worst, max(abs(got[f] - want[f]) / max(abs(want[f]), 1.0) for f in want))
    report(7, "max-min allocation equals water-filling", worst <= 1e-9,
           f"100 instances, worst deviation {worst:.2e}", time.perf_counter() - t0, 5)


def test_determinism(report, tmp_path, capsys):
    t0 = time.perf_counter()
    argv = ["run", "--topology", "er:p=0.3", "--n", "10", "--model", "v3s", "--mode", "both", "--seed", "7"]
    codes = [main(argv + ["--out", str(tmp_path / d)]) for d in ("first", "second")]
    capsys.readouterr()
    a, b = ((tmp_path / d / "metrics.csv").read_bytes() for d in ("first", "second"))
    report(8, "identical runs give identical CSV", codes == [0, 0] and a == b,
           f"exit codes {codes}, {len(a)} bytes, identical={a == b}", time.perf_counter() - t0, 10)


def test_report_averaging(report):
    t0 = time.perf_counter()
    m = aggregate_reports([ConnectionReport("A", (("B", 4),)), ConnectionReport("B", (("A", 6),))])
    rng = random.Random(3)
    asym = 0
    for _ in range(200):
        labels = [f"n{i}" for i in range(rng.randint(1, 10))]
        reports = [ConnectionReport(a, tuple((b, rng.uniform(0.1, 30)) for b in labels
                                             if b != a and rng.random() < 0.6)) for a in labels]
        mat = aggregate_reports(reports)
        n = len(labels)
        asym += any(mat[i, j] != mat[j, i] and (mat.has_link(i, j) or mat.has_link(j, i))
                    for i in range(n) for j in range(n))
    report(9, "report averaging", m[0, 1] == 5.0 and asym == 0,
           f"mean(4, 6)={m[0, 1]} asymmetric matrices={asym}/200", time.perf_counter() - t0, 1)
