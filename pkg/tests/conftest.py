import numpy as np
import pytest

from grassy.graph import AtomAlphabet, build_graph


def random_graph(rng, n, alphabet=None, p=0.3, connected=True):
    """Erdos-Renyi graph on ``n`` nodes; a random spanning tree is added when ``connected``."""
    alphabet = alphabet or AtomAlphabet()
    edges = set()
    if connected:
        order = rng.permutation(n)
        for k in range(1, n):
            u, v = int(order[k]), int(order[rng.integers(k)])
            edges.add((min(u, v), max(u, v)))
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.add((u, v))
    labels = rng.integers(len(alphabet), size=n).tolist()
    return build_graph(sorted(edges), labels, alphabet)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance lines, printed once at the end of the session whatever the capture mode
ACCEPTANCE: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
            terminalreporter.write_line(ACCEPTANCE[key])
