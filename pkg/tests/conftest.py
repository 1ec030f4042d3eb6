import os
from pathlib import Path

import numpy as np
import pytest

from gcatlab.graph import Graph, grid_graph, laplacian

# Acceptance outcomes, filled in by tests/test_acceptance.py and printed once
# at the end of the run.
ACCEPTANCE_LINES = {}


def cache_dir():
    return Path(os.environ.get("GCATLAB_CACHE", Path.home() / ".cache" / "gcatlab"))


@pytest.fixture
def k2():
    return Graph.from_edges(2, [0], [1])


@pytest.fixture
def k3():
    return Graph.from_edges(3, [0, 0, 1], [1, 2, 2])


@pytest.fixture
def p3():
    return Graph.from_edges(3, [0, 1], [1, 2])


@pytest.fixture(scope="session")
def small_grid():
    return grid_graph(12)


@pytest.fixture(scope="session")
def small_grid_basis(small_grid):
    from gcatlab.spectral import eigendecompose
    return eigendecompose(laplacian(small_grid).toarray())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
