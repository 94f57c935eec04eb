import numpy as np
import pytest

from chillax.hierarchy import Hierarchy, load_hierarchy

T1_TEXT = "A\tR\nB\tR\na1\tA\na2\tA\nb1\tB\n"
D1_TEXT = T1_TEXT + "c\tA\nc\tB\n"
ANIMAL_TEXT = "animal\troot\ncat\tanimal\ndog\tanimal\n"


@pytest.fixture
def t1():
    return load_hierarchy(T1_TEXT)


@pytest.fixture
def d1():
    return load_hierarchy(D1_TEXT)


def random_dag(rng: np.random.Generator, n_nodes: int, max_parents: int = 3) -> Hierarchy:
    """Single-rooted DAG: node k picks 1..max_parents parents among nodes < k."""
    edges = []
    for k in range(1, n_nodes):
        n_par = int(rng.integers(1, min(max_parents, k) + 1))
        for p in rng.choice(k, size=n_par, replace=False):
            edges.append((f"v{k}", f"v{int(p)}"))
    return Hierarchy.from_edges(edges)


def random_tree(rng: np.random.Generator, n_nodes: int) -> Hierarchy:
    return random_dag(rng, n_nodes, max_parents=1)


def chain(depth: int) -> Hierarchy:
    names = [f"d{i}" for i in range(depth + 1)]
    return Hierarchy.from_edges([(names[i + 1], names[i]) for i in range(depth)])


# -- acceptance criteria summary --------------------------------------------

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None and (rep.when == "call" or rep.failed):
        _ACCEPTANCE.append((marker.args[0], marker.args[1], rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"AC{number:02d} {'PASS' if passed else 'FAIL'}  {title}")
