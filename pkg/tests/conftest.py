import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from patrolgame.instance import GraphInstance, PolyUtility, Site  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def _utils(utilities, n):
    if utilities is None:
        return (PolyUtility.constant(1.0),) * n
    return tuple(u if isinstance(u, PolyUtility) else PolyUtility.constant(float(u)) for u in utilities)


def unit_instance(n, utilities=None, penalty=0.0):
    W = np.ones((n, n), dtype=np.int64)
    np.fill_diagonal(W, 0)
    sites = tuple(Site(i, float(i), 0.0) for i in range(n))
    return GraphInstance(sites, W, _utils(utilities, n), penalty)


def matrix_instance(W, utilities=None):
    W = np.asarray(W, dtype=np.int64)
    n = W.shape[0]
    sites = tuple(Site(i, float(i), 0.0) for i in range(n))
    return GraphInstance(sites, W, _utils(utilities, n))


@pytest.fixture
def unit2():
    return unit_instance(2)


@pytest.fixture
def unit3():
    return unit_instance(3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
