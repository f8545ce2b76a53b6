import numpy as np
import pytest

from grassy.errors import DimensionMismatch, GraphTooLarge, InvalidPermutation, OutOfRangeNode, SelfLoop, UnknownLabel
from grassy.graph import (
    DEFAULT_ALPHABET,
    AtomAlphabet,
    build_graph,
    diffuse,
    label_signals,
    lazy_walk,
    pad_adjacency,
    permute,
)

from conftest import random_graph


def path3(labels=("C", "C", "C")):
    return build_graph([(0, 1), (1, 2)], list(labels))


def test_k2_adjacency():
    g = build_graph([(0, 1)], ["C", "C"])
    np.testing.assert_array_equal(g.adjacency, [[0, 1], [1, 0]])
    assert g.n == 2 and g.n_edges == 1


def test_single_atom():
    g = build_graph([], ["C"])
    np.testing.assert_array_equal(g.adjacency, [[0.0]])


def test_duplicate_edges_collapse():
    a = build_graph([(0, 1), (1, 0)], ["C", "C"])
    b = build_graph([(0, 1)], ["C", "C"])
    np.testing.assert_array_equal(a.adjacency, b.adjacency)


def test_bad_edges():
    with pytest.raises(OutOfRangeNode):
        build_graph([(0, 2)], ["C", "C"])
    with pytest.raises(SelfLoop):
        build_graph([(1, 1)], ["C", "C"])
    with pytest.raises(UnknownLabel):
        build_graph([], ["Xx"])


def test_adjacency_is_read_only():
    g = path3()
    with pytest.raises(ValueError):
        g.adjacency[0, 1] = 5.0


def test_lazy_walk_examples():
    np.testing.assert_allclose(lazy_walk(build_graph([(0, 1)], ["C", "C"])).P, [[0.5, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(
        lazy_walk(path3()).P, [[0.5, 0.25, 0.0], [0.5, 0.5, 0.5], [0.0, 0.25, 0.5]], atol=0
    )
    np.testing.assert_array_equal(lazy_walk(build_graph([], ["C"])).P, [[1.0]])


def test_lazy_walk_column_stochastic(rng):
    for _ in range(20):
        g = random_graph(rng, int(rng.integers(1, 12)), connected=False)
        P = lazy_walk(g).P
        np.testing.assert_allclose(P.sum(axis=0), 1.0, atol=1e-14)
        assert (P >= 0).all()


def test_diffuse():
    P = lazy_walk(build_graph([(0, 1)], ["C", "C"]))
    x = np.array([1.0, 0.0])
    np.testing.assert_array_equal(diffuse(P, x, 0), x)
    np.testing.assert_allclose(diffuse(P, x, 1), [0.5, 0.5])
    # brute-force oracle: 64 repeated products
    y = x.copy()
    for _ in range(64):
        y = P.P @ y
    np.testing.assert_allclose(diffuse(P, x, 64), y)
    np.testing.assert_allclose(y, [0.5, 0.5])
    with pytest.raises(DimensionMismatch):
        diffuse(P, np.ones(3), 1)


def test_power_cache_matches_matrix_power(rng):
    g = random_graph(rng, 9)
    P = lazy_walk(g)
    for t in (5, 2, 16, 7):
        np.testing.assert_allclose(P.power(t), np.linalg.matrix_power(P.P, t), atol=1e-14)


def test_label_signals():
    g = build_graph([(0, 1)], ["C", "O"])
    X = label_signals(g)
    assert X.shape == (2, len(DEFAULT_ALPHABET))
    np.testing.assert_array_equal(X[:, DEFAULT_ALPHABET.index("C")], [1, 0])
    np.testing.assert_array_equal(X[:, DEFAULT_ALPHABET.index("O")], [0, 1])
    np.testing.assert_array_equal(label_signals(path3())[:, 0], [1, 1, 1])
    np.testing.assert_array_equal(X.sum(axis=1), 1.0)


def test_label_signals_other_alphabet():
    small = AtomAlphabet(("O", "C"))
    X = label_signals(build_graph([(0, 1)], ["C", "O"]), small)
    np.testing.assert_array_equal(X, [[0, 1], [1, 0]])
    with pytest.raises(UnknownLabel):
        label_signals(build_graph([], ["N"]), small)


def test_pad_adjacency():
    k2 = build_graph([(0, 1)], ["C", "C"])
    np.testing.assert_array_equal(pad_adjacency(k2, 3), [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    np.testing.assert_array_equal(pad_adjacency(k2, 2), k2.adjacency)
    np.testing.assert_array_equal(pad_adjacency(build_graph([], ["C", "C"]), 4), np.zeros((4, 4)))
    with pytest.raises(GraphTooLarge):
        pad_adjacency(path3(), 2)


def test_permute_examples():
    g = path3(("C", "N", "O"))
    assert permute(g, [0, 1, 2]).adjacency.tolist() == g.adjacency.tolist()
    k2 = build_graph([(0, 1)], ["C", "C"])
    np.testing.assert_array_equal(permute(k2, [1, 0]).adjacency, k2.adjacency)
    rev = permute(g, [2, 1, 0])
    np.testing.assert_array_equal(rev.adjacency, g.adjacency)
    assert rev.symbols() == ["O", "N", "C"]
    with pytest.raises(InvalidPermutation):
        permute(g, [0, 0, 1])


def test_permute_moves_edges(rng):
    g = random_graph(rng, 8)
    perm = rng.permutation(8)
    h = permute(g, perm)
    for u, v in g.edges():
        assert h.adjacency[perm[u], perm[v]] == 1.0
    assert h.n_edges == g.n_edges
    assert [h.labels[perm[i]] for i in range(8)] == g.labels.tolist()
