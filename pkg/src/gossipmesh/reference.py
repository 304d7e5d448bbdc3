"""The ten-node reference gossip round (nodes A..K, no J).

``ROWS`` holds the expected queue picture after every slot, one cell per
node in label order: upper case is a model the node holds and has finished
with, lower case a model still waiting in its queue, both in arrival order.
"""

from __future__ import annotations

from .graph import WeightedGraph, bfs_two_coloring, prim_mst
from .gossip import GossipTrace, run_round
from .protocol import Schedule, make_schedule

LABELS = ("A", "B", "C", "D", "E", "F", "G", "H", "I", "K")
# recovered from who receives what in the first slots
TREE_EDGES = ("AH", "BC", "BI", "CD", "EF", "FG", "FH", "GK", "IK")
RED = frozenset("CEGHI")
BLUE = frozenset("ABDFK")

ROWS = (
    "aH bci C dC E fegh G H I kgi",
    "AH Bci Cbd DC EF Fegh Gfk Haf Ibk Kgi",
    "AH Bci CBd DCB EF Fegha GFk HAf IBk Kgifb",
    "AH BCi CBd DCB EF FEgha GFke HAfe IBkcg KGifb",
    "AHF BCidk CBD DCB EF FEghak GFKe HAFe IBKcg KGifb",
    "AHF BCIdk CBDi DCB EFG FEGhak GFKei HAFeg IBKcg KGIfb",
    "AHFE BCIdk CBDI DCBI EFG FEGhak GFKEi HAFEg IBKCg KGIfbec",
    "AHFE BCIDk CBDI DCBI EFGH FEGHak GFKEih HAFEg IBKCgdf KGIFbec",
    "AHFEG BCIDkg CBDI DCBI EFGH FEGHaki GFKEIh HAFEG IBKCGdf KGIFbec",
    "AHFEG BCIDKg CBDIk DCBI EFGHA FEGHAki GFKEIhab HAFEG IBKCGdf KGIFBec",
    "AHFEG BCIDKg CBDIK DCBIK EFGHA FEGHAki GFKEIHab HAFEG IBKCGDf KGIFBechd",
    "AHFEG BCIDKG CBDIKg DCBIK EFGHAK FEGHAKi GFKEIHab HAFEGk IBKCGDfe KGIFBEchd",
    "AHFEGK BCIDKGf CBDIKG DCBIKG EFGHAK FEGHAKi GFKEIHAb HAFEGK IBKCGDFe KGIFBEchda",
    "AHFEGK BCIDKGF CBDIKGf DCBIKG EFGHAKI FEGHAKI GFKEIHAbc HAFEGKi IBKCGDFe KGIFBEChda",
    "AHFEGKI BCIDKGFe CBDIKGF DCBIKGF EFGHAKI FEGHAKIb GFKEIHABc HAFEGKI IBKCGDFE KGIFBEChda",
    "AHFEGKI BCIDKGFE CBDIKGFe DCBIKGF EFGHAKIB FEGHAKIB GFKEIHABc HAFEGKIb IBKCGDFEh KGIFBECHda",
    "AHFEGKIB BCIDKGFEh CBDIKGFE DCBIKGFE EFGHAKIB FEGHAKIBc GFKEIHABC HAFEGKIB IBKCGDFEH KGIFBECHda",
    "AHFEGKIB BCIDKGFEH CBDIKGFEh DCBIKGFE EFGHAKIBC FEGHAKIBC GFKEIHABCd HAFEGKIBc IBKCGDFEH KGIFBECHDa",
    "AHFEGKIBC BCIDKGFEH CBDIKGFEH DCBIKGFEH EFGHAKIBC FEGHAKIBCd GFKEIHABCD HAFEGKIBC IBKCGDFEH KGIFBECHDa",
    "AHFEGKIBC BCIDKGFEH CBDIKGFEH DCBIKGFEH EFGHAKIBCD FEGHAKIBCD GFKEIHABCD HAFEGKIBCd IBKCGDFEHa KGIFBECHDA",
    "AHFEGKIBCD BCIDKGFEHa CBDIKGFEH DCBIKGFEH EFGHAKIBCD FEGHAKIBCD GFKEIHABCD HAFEGKIBCD IBKCGDFEHA KGIFBECHDA",
    "AHFEGKIBCD BCIDKGFEHA CBDIKGFEHa DCBIKGFEH EFGHAKIBCD FEGHAKIBCD GFKEIHABCD HAFEGKIBCD IBKCGDFEHA KGIFBECHDA",
    "AHFEGKIBCD BCIDKGFEHA CBDIKGFEHA DCBIKGFEHA EFGHAKIBCD FEGHAKIBCD GFKEIHABCD HAFEGKIBCD IBKCGDFEHA KGIFBECHDA",
)

EXPECTED_SLOTS = len(ROWS)
EXPECTED_TRANSMISSIONS = 90


def reference_graph(cost: float = 1.0) -> WeightedGraph:
    idx = {lab: i for i, lab in enumerate(LABELS)}
    return WeightedGraph.from_edges(len(LABELS), [(idx[a], idx[b], cost) for a, b in TREE_EDGES], LABELS)


def reference_schedule(model_size: float = 1.0, ping_size: float = 1000.0) -> Schedule:
    graph = reference_graph()
    tree = prim_mst(graph)
    coloring = bfs_two_coloring(tree, LABELS.index("C"))
    return make_schedule(graph, tree, coloring, model_size, ping_size)


def row_cells(slot: int) -> tuple[str, ...]:
    return tuple(ROWS[slot - 1].split())


def pending_and_held(cell: str) -> tuple[frozenset, frozenset]:
    return (frozenset(ch.upper() for ch in cell if ch.islower()),
            frozenset(ch for ch in cell if ch.isupper()))


def mismatches(trace: GossipTrace) -> list[str]:
    """Slot-by-slot differences between ``trace`` and :data:`ROWS`."""
    problems = []
    if trace.n_slots != EXPECTED_SLOTS:
        problems.append(f"expected {EXPECTED_SLOTS} slots, got {trace.n_slots}")
    for slot in range(1, min(trace.n_slots, EXPECTED_SLOTS) + 1):
        for u, want in enumerate(row_cells(slot)):
            got = trace.cell(slot, u)
            if got != want:
                problems.append(f"slot {slot}, node {LABELS[u]}: expected {want}, got {got}")
    return problems


def replay() -> tuple[GossipTrace, list[str]]:
    trace = run_round(reference_schedule())
    return trace, mismatches(trace)
