import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gossipmesh.graph import WeightedGraph  # noqa: E402


@pytest.fixture
def triangle():
    return WeightedGraph.from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 5)], "ABC")
