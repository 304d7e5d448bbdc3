import json
from collections import Counter
from itertools import combinations

import pytest

from gossipmesh import reference
from gossipmesh.errors import InconsistentState, NonTermination
from gossipmesh.gossip import (
    SELF,
    ModelRef,
    SlotTick,
    default_models,
    flood_round,
    init_round,
    retransmit_after_disruption,
    run_round,
    step_slot,
)
from gossipmesh.graph import Color, WeightedGraph

from helpers import path_graph, tree_schedule

L = reference.LABELS
IDX = {lab: i for i, lab in enumerate(L)}


def ref_states():
    sched = reference.reference_schedule()
    return sched, init_round(sched, default_models(sched.n))


def queues(states):
    return {L[u]: "".join(L[o] for o in st.queued_owners()) for u, st in states.items()}


def sends(txs):
    out = {}
    for t in txs:
        out.setdefault(L[t.sender], set()).add(L[t.receiver])
    return out


class TestInit:
    def test_singleton_queues(self):
        _, states = ref_states()
        assert all(len(st.queue) == 1 for st in states.values())
        assert states[IDX["A"]].queue[0].model.owner == IDX["A"]
        assert states[IDX["A"]].queue[0].received_from == SELF
        assert sum(len(st.store) for st in states.values()) == 10


class TestReferenceSlots:
    def test_slot_one(self):
        _, states = ref_states()
        states, txs = step_slot(states, SlotTick(1))
        assert sends(txs) == {"C": {"B", "D"}, "E": {"F"}, "G": {"F", "K"}, "H": {"A", "F"}, "I": {"B", "K"}}
        q = queues(states)
        assert (q["B"], q["F"], q["K"], q["D"], q["A"]) == ("BCI", "FEGH", "KGI", "D", "A")
        assert IDX["C"] in [m.owner for m in states[IDX["D"]].store.values()]

    def test_slot_two(self):
        _, states = ref_states()
        states, _ = step_slot(states, SlotTick(1))
        states, txs = step_slot(states, SlotTick(2))
        assert sends(txs) == {"A": {"H"}, "B": {"C", "I"}, "D": {"C"}, "F": {"E", "G", "H"}, "K": {"G", "I"}}
        assert {L[t.sender]: L[t.model.owner] for t in txs} == dict(A="A", B="B", D="D", F="F", K="K")
        q = queues(states)
        assert (q["C"], q["G"], q["H"], q["I"], q["E"]) == ("BD", "FK", "AF", "BK", "")

    def test_full_replay(self):
        trace, problems = reference.replay()
        assert problems == []
        assert trace.n_slots == 23 and trace.message_count == 90


def test_idle_node_unchanged():
    sched = tree_schedule(2, 0)
    states = init_round(sched, default_models(2))
    states, _ = step_slot(states, SlotTick(1))
    red = next(u for u in states if states[u].color is Color.RED)
    before = (states[red].queued_owners(), states[red].stored_owners())
    after, txs = step_slot(states, SlotTick(3))
    assert txs == [] and (after[red].queued_owners(), after[red].stored_owners()) == before


def test_two_node_tree():
    trace = run_round(tree_schedule(2, 0))
    assert trace.n_slots == 2 and trace.message_count == 2


def test_inconsistent_state():
    sched = tree_schedule(3, 0)
    states = init_round(sched, default_models(3))
    states[0].store.clear()
    with pytest.raises(InconsistentState):
        step_slot(states, SlotTick(1))


def test_guard():
    with pytest.raises(NonTermination):
        run_round(reference.reference_schedule(), max_slots=5)


@pytest.mark.parametrize("seed", range(100))
def test_transmissions_and_invariants(seed):
    n = 2 + seed % 49
    sched = tree_schedule(n, seed)
    trace = run_round(sched)
    txs = trace.transmissions
    assert len(txs) == n * (n - 1)
    # each node receives each foreign model once, and no directed edge repeats a model
    assert Counter((t.receiver, t.model.owner) for t in txs) == {
        (v, o): 1 for v in range(n) for o in range(n) if v != o}
    assert len({(t.sender, t.receiver, t.model.key) for t in txs}) == len(txs)
    for rec in trace.records:
        colors = {sched.coloring[t.sender] for t in rec.transmissions}
        assert colors <= {rec.tick.color}
        senders = {t.sender for t in rec.transmissions}
        assert len(senders) <= len(sched.coloring.members(rec.tick.color))
        assert len({t.model.owner for t in rec.transmissions if t.sender == next(iter(senders), None)}) <= 1


@pytest.mark.parametrize("seed", range(20))
def test_fifo_and_degree_one(seed):
    n = 12
    sched = tree_schedule(n, seed)
    trace = run_round(sched)
    arrivals = {u: [u] for u in range(n)}
    departures = {u: [] for u in range(n)}
    for rec in trace.records:
        for u in range(n):
            out = {t.model.owner for t in rec.transmissions if t.sender == u}
            departures[u].extend(sorted(out))
        for t in rec.transmissions:
            if sched.tree.degree(t.receiver) > 1:
                arrivals[t.receiver].append(t.model.owner)
        for u in range(n):
            if sched.tree.degree(u) == 1 and u in departures and departures[u]:
                assert rec.queues[u] == ()
    for u in range(n):
        assert departures[u] == (arrivals[u] if sched.tree.degree(u) > 1 else [u])


class TestDisruption:
    def test_sender_offline_keeps_queue(self):
        _, states = ref_states()
        c = IDX["C"]
        after = retransmit_after_disruption(states, {c}, SlotTick(1))
        assert after[c].queued_owners() == states[c].queued_owners()
        assert after[c].queue[0].targets == states[c].queue[0].targets

    def test_receiver_offline_gets_it_next_turn(self):
        _, states = ref_states()
        d, c = IDX["D"], IDX["C"]
        s1, tx1 = step_slot(states, SlotTick(1), offline={d})
        assert (c, d) not in {(t.sender, t.receiver) for t in tx1}
        assert s1[c].queue[0].model.owner == c and s1[c].queue[0].targets == (d,)
        s2, _ = step_slot(s1, SlotTick(2))
        s3, tx3 = step_slot(s2, SlotTick(3))
        assert [(t.sender, t.receiver, t.model.owner) for t in tx3 if t.sender == c] == [(c, d, c)]

    def test_no_disruption_equivalent(self):
        _, states = ref_states()
        a, _ = step_slot(states, SlotTick(1))
        b = retransmit_after_disruption(states, set(), SlotTick(1))
        assert queues(a) == queues(b)

    def test_round_still_exact_with_outages(self):
        sched = reference.reference_schedule()
        trace = run_round(sched, disruptions={1: {IDX["F"]}, 2: {IDX["C"]}, 5: {IDX["K"], IDX["A"]}})
        assert trace.message_count == 90
        assert trace.n_slots > 23


class TestFlooding:
    def test_path_single_model(self):
        trace = flood_round(path_graph([1, 1]), {0: ModelRef(0)})
        assert trace.message_count == 2

    @pytest.mark.parametrize("n", range(2, 11))
    def test_complete_count(self, n):
        g = WeightedGraph.from_edges(n, [(u, v, 1) for u, v in combinations(range(n), 2)])
        assert flood_round(g).message_count == n * (n - 1) ** 2

    def test_ratio_on_k10(self):
        g = WeightedGraph.from_edges(10, [(u, v, 1) for u, v in combinations(range(10), 2)])
        gossip = run_round(tree_schedule(10, 0)).message_count
        assert flood_round(g).message_count == 810 and gossip == 90
        assert flood_round(g).message_count / gossip == 9

    def test_parents_are_causal(self):
        g = reference.reference_graph()
        trace = flood_round(g)
        for t in trace.transmissions:
            if t.parent is None:
                assert t.sender == t.model.owner and t.hop == 1
            else:
                p = trace.transmissions[t.parent]
                assert p.receiver == t.sender and p.model == t.model and p.hop == t.hop - 1


class TestOutput:
    def test_jsonl(self):
        trace, _ = reference.replay()
        lines = trace.to_jsonl().splitlines()
        assert len(lines) == 23
        first = json.loads(lines[0])
        assert first["slot"] == 1 and first["color"] == Color.RED.value
        assert first["queues"]["B"] == ["B", "C", "I"]

    def test_table(self):
        trace, _ = reference.replay()
        rows = trace.render_table().splitlines()
        assert len(rows) == 24
        assert "B* C* I*" in rows[1]
