import itertools

import numpy as np
import pytest

from loopdwell.digraph import Digraph
from loopdwell.spectral import SubsystemEnsemble

FIG1_EDGES = [(2, 1), (1, 3), (3, 1), (1, 4), (4, 3), (3, 2)]
FIG1_MODES = (2, 1, 3, 1, 4, 3, 2, 1, 4, 3, 1, 4, 3)

LOOP_EXAMPLE_EDGES = [(1, 2), (2, 3), (3, 1), (3, 4), (4, 3), (3, 5), (5, 6), (6, 3)]
LOOP_EXAMPLE_MATRICES = [
    [[-1.5, 0], [0, -1.5]],
    [[-1, 0], [1, -1]],
    [[-11, 3], [-18, 4]],
    [[3, -45], [1, -11]],
    [[3, -46], [1, -11]],
    [[-2.1, 1], [0, -2.1]],
]

RING_EDGES = [(1, 2), (2, 3), (3, 1)]
# second matrix with bottom-right entry 0.04 (eigenvalues -0.26, -0.1); see the ledger
RING_MATRICES = [
    [[-2, 0], [0, -2]],
    [[-0.4, -0.03], [1.4, 0.04]],
    [[0.9, 0], [2, -0.6]],
]
RING_MATRIX_2_AS_PRINTED = [[-0.4, -0.03], [1.43, 0.4]]


@pytest.fixture
def fig1():
    return Digraph(4, FIG1_EDGES)


@pytest.fixture
def loop_example():
    return Digraph(6, LOOP_EXAMPLE_EDGES), SubsystemEnsemble.from_matrices(LOOP_EXAMPLE_MATRICES)


@pytest.fixture
def ring_example():
    return Digraph(3, RING_EDGES), SubsystemEnsemble.from_matrices(RING_MATRICES)


def random_matrix(rng, n, real_parts):
    """Diagonalizable real matrix with the given eigenvalue real parts (a complex pair when possible)."""
    real_parts = list(real_parts)
    d = np.zeros((n, n))
    i = 0
    while i < n:
        if i + 1 < n and rng.random() < 0.3:
            w = rng.uniform(0.2, 2.0)
            d[i : i + 2, i : i + 2] = [[real_parts[i], w], [-w, real_parts[i]]]
            i += 2
        else:
            d[i, i] = real_parts[i]
            i += 1
    while True:
        p = rng.standard_normal((n, n))
        if np.linalg.cond(p) < 50:
            return p @ d @ np.linalg.inv(p)


def random_stable_matrix(rng, n, lo=0.3, hi=2.0):
    return random_matrix(rng, n, -np.sort(rng.uniform(lo, hi, n)))


def random_unstable_matrix(rng, n, lo=0.1, hi=1.0):
    parts = rng.uniform(lo, hi, n) * rng.choice([-1, 1], n)
    parts[0] = abs(parts[0])
    return random_matrix(rng, n, parts)


def random_strong_graph(rng, k, extra=0.3):
    """Ring through all vertices plus random extra edges: strongly connected, no sinks."""
    perm = rng.permutation(np.arange(1, k + 1))
    edges = {(int(perm[i]), int(perm[(i + 1) % k])) for i in range(k)} if k > 1 else {(1, 1)}
    for i, j in itertools.product(range(1, k + 1), repeat=2):
        if i != j and rng.random() < extra:
            edges.add((i, j))
    return Digraph(k, edges)


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion at the end of the run
# ---------------------------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    failed = rep.failed or (rep.when == "setup" and rep.skipped)
    if rep.when == "call" or failed:
        _, before = _ACCEPTANCE.get(number, (title, True))
        _ACCEPTANCE[number] = (title, before and not failed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[number]
        terminalreporter.write_line(f"AC{number:>2} {'PASS' if ok else 'FAIL'}  {title}")
