import itertools

import numpy as np
import pytest

from grassy.errors import EmptySampleSet
from grassy.graph import build_graph
from grassy.smiles import parse_smiles
from grassy.validity import (
    DEGREE_TOO_HIGH,
    RING_TOO_LARGE,
    TOO_SMALL,
    ValidityConfig,
    check_validity,
    circuit_sizes,
    discretize,
    judge,
    largest_component,
    ring_sizes,
    rule_summary,
    validity_fraction,
)

from conftest import random_graph


def cycle(n):
    A = np.zeros((n, n))
    for i in range(n):
        A[i, (i + 1) % n] = A[(i + 1) % n, i] = 1
    return A


def star(k):
    A = np.zeros((k + 1, k + 1))
    A[0, 1:] = A[1:, 0] = 1
    return A


def cycle_space_oracle(A):
    """Minimum cycle basis lengths by brute force over the whole cycle space.

    Every element of the cycle space is a XOR of fundamental cycles; the
    elements that are single simple cycles, taken shortest first with GF(2)
    independence, form a minimum basis (matroid greedy).
    """
    n = A.shape[0]
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if A[u, v]]
    eid = {e: k for k, e in enumerate(edges)}
    # spanning forest by DFS
    parent = {}
    seen = set()
    tree = set()
    for r in range(n):
        if r in seen:
            continue
        stack = [r]
        seen.add(r)
        while stack:
            x = stack.pop()
            for y in range(n):
                if A[x, y] and y not in seen:
                    seen.add(y)
                    parent[y] = x
                    tree.add(eid[(min(x, y), max(x, y))])
                    stack.append(y)

    def root_path(x):
        path = []
        while x in parent:
            path.append(eid[(min(x, parent[x]), max(x, parent[x]))])
            x = parent[x]
        return path

    fundamental = []
    for k, (u, v) in enumerate(edges):
        if k in tree:
            continue
        mask = 1 << k
        for e in root_path(u) + root_path(v):
            mask ^= 1 << e
        fundamental.append(mask)

    def is_simple_cycle(mask):
        es = [edges[k] for k in range(len(edges)) if mask >> k & 1]
        deg = {}
        for u, v in es:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        if any(d != 2 for d in deg.values()):
            return False
        # connected?
        verts = list(deg)
        adj = {x: [] for x in verts}
        for u, v in es:
            adj[u].append(v)
            adj[v].append(u)
        stack, seen_v = [verts[0]], {verts[0]}
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen_v:
                    seen_v.add(y)
                    stack.append(y)
        return len(seen_v) == len(verts)

    cycles = set()
    for r in range(1, len(fundamental) + 1):
        for combo in itertools.combinations(fundamental, r):
            mask = 0
            for c in combo:
                mask ^= c
            if mask and is_simple_cycle(mask):
                cycles.add(mask)
    basis = {}
    lengths = []
    for mask in sorted(cycles, key=lambda m: (bin(m).count("1"), m)):
        v = mask
        while v:
            p = v.bit_length() - 1
            if p not in basis:
                basis[p] = v
                lengths.append(bin(mask).count("1"))
                break
            v ^= basis[p]
    return sorted(lengths)


def test_ring_sizes_against_cycle_space(rng):
    for _ in range(150):
        n = int(rng.integers(3, 8))
        g = random_graph(rng, n, p=float(rng.uniform(0.1, 0.7)))
        assert ring_sizes(g.adjacency) == cycle_space_oracle(g.adjacency)


def test_fused_rings():
    assert ring_sizes(parse_smiles("c1ccc2ccccc2c1").adjacency) == [6, 6]
    assert circuit_sizes(parse_smiles("c1ccc2ccccc2c1").adjacency) == [6, 6, 10]
    assert ring_sizes(parse_smiles("CCCC").adjacency) == []


def test_rule_examples():
    v = check_validity(star(6))
    assert not v.valid and v.failed_rules == [DEGREE_TOO_HIGH] and v.max_degree_found == 6
    v = check_validity(cycle(12))
    assert not v.valid and v.failed_rules == [RING_TOO_LARGE] and v.largest_ring == 12
    v = check_validity(cycle(6), ValidityConfig(min_atoms=5))
    assert v.valid and v.failed_rules == []


def test_too_small_boundary():
    assert check_validity(cycle(5), ValidityConfig(min_atoms=5)).failed_rules == [TOO_SMALL]
    assert check_validity(cycle(6), ValidityConfig(min_atoms=5)).valid
    assert check_validity(cycle(6), ValidityConfig(min_atoms=6)).failed_rules == [TOO_SMALL]


def test_all_circuit_mode():
    A = parse_smiles("C1CCCC2CCCCC2C1").adjacency  # decalin-like, the envelope is a 10-ring
    cfg = ValidityConfig(max_ring_size=9)
    assert check_validity(A, cfg).valid
    assert check_validity(A, ValidityConfig(max_ring_size=9, all_circuits=True)).failed_rules == [RING_TOO_LARGE]


def test_discretize_threshold_strict():
    W = np.array([[0, 0.5, 0.51], [0.5, 0, 0.2], [0.51, 0.2, 0]])
    d = discretize(W, 0.5)
    np.testing.assert_array_equal(d.nodes, [0, 2])
    np.testing.assert_array_equal(d.adjacency, [[0, 1], [1, 0]])


def test_largest_component_tie_lowest_index():
    A = np.zeros((5, 5))
    A[3, 4] = A[4, 3] = 1
    A[1, 2] = A[2, 1] = 1
    np.testing.assert_array_equal(largest_component(A), [1, 2])


def test_judge_and_fraction():
    W = np.zeros((8, 8))
    W[:6, :6] = cycle(6) * 0.9
    d, v = judge(W)
    assert v.valid and v.component_size == 6
    assert validity_fraction([W, star(6), cycle(12)]) == pytest.approx(1 / 3)
    with pytest.raises(EmptySampleSet):
        validity_fraction([])
    s = rule_summary([v, check_validity(star(6))])
    assert s == {"total": 2, "valid": 1, TOO_SMALL: 0, RING_TOO_LARGE: 0, DEGREE_TOO_HIGH: 1}


def test_verdict_dict():
    assert check_validity(cycle(7)).to_dict() == {
        "valid": True,
        "failed_rules": [],
        "component_size": 7,
        "largest_ring": 7,
        "max_degree_found": 2,
    }


def test_long_circuit_search_matches_enumeration(rng):
    from grassy.validity import longest_circuit_over

    for _ in range(100):
        g = random_graph(rng, int(rng.integers(3, 9)), p=float(rng.uniform(0.05, 0.5)))
        circuits = circuit_sizes(g.adjacency)
        for bound in (3, 5, 7):
            found = longest_circuit_over(g.adjacency, bound)
            if any(c > bound for c in circuits):
                assert found in circuits and found > bound
            else:
                assert found == 0


def test_all_circuit_mode_dense_graph_is_fast():
    A = np.ones((18, 18)) - np.eye(18)
    v = check_validity(A, ValidityConfig(all_circuits=True))
    assert RING_TOO_LARGE in v.failed_rules and v.largest_ring > 10
