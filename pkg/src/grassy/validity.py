"""Discretisation of generated adjacencies and molecule-likeness rules.

A generated soft adjacency is thresholded, restricted to its largest
connected component, and judged on three rules: the component must have more
than ``min_atoms`` vertices, no ring may exceed ``max_ring_size`` vertices, and
no vertex may exceed ``max_degree`` neighbours.

Rings are the cycles of a minimum cycle basis (Horton candidate set plus
greedy GF(2) elimination), which matches chemical ring perception: fused
bicyclics report their two small rings rather than the enclosing circuit.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import EmptySampleSet

TOO_SMALL = "TooSmall"
RING_TOO_LARGE = "RingTooLarge"
DEGREE_TOO_HIGH = "DegreeTooHigh"

# min_atoms per ZINC tranche
TRANCHE_MIN_ATOMS = {"BBAB": 5, "FBAB": 15, "JBCD": 25}


@dataclass(frozen=True)
class ValidityConfig:
    threshold: float = 0.5
    min_atoms: int = 5
    max_ring_size: int = 10
    max_degree: int = 5
    all_circuits: bool = False

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.min_atoms < 1:
            raise ValueError("min_atoms must be >= 1")


@dataclass
class ValidityVerdict:
    valid: bool
    failed_rules: list[str] = field(default_factory=list)
    component_size: int = 0
    largest_ring: int = 0
    max_degree_found: int = 0

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "failed_rules": list(self.failed_rules),
            "component_size": self.component_size,
            "largest_ring": self.largest_ring,
            "max_degree_found": self.max_degree_found,
        }


@dataclass
class Discretized:
    adjacency: np.ndarray  # binary, largest component only
    nodes: np.ndarray  # original indices of the kept nodes


def largest_component(adj: np.ndarray) -> np.ndarray:
    """Sorted node indices of the largest component; ties go to the lowest node index."""
    n = adj.shape[0]
    _, comp = connected_components(csr_matrix(adj), directed=False)
    best, best_key = None, None
    for c in np.unique(comp):
        nodes = np.flatnonzero(comp == c)
        key = (-len(nodes), nodes[0])
        if best_key is None or key < best_key:
            best, best_key = nodes, key
    return best if best is not None else np.arange(n)


def discretize(W: np.ndarray, threshold: float = 0.5) -> Discretized:
    W = np.asarray(W, dtype=np.float64)
    adj = (W > threshold).astype(np.float64)
    np.fill_diagonal(adj, 0.0)
    adj = np.maximum(adj, adj.T)
    nodes = largest_component(adj)
    return Discretized(adj[np.ix_(nodes, nodes)], nodes)


# ----------------------------------------------------------------- rings


def _edge_index(adj: np.ndarray) -> dict[tuple[int, int], int]:
    u, v = np.nonzero(np.triu(adj))
    return {(int(a), int(b)): k for k, (a, b) in enumerate(zip(u, v))}


def _bfs_tree(adj_list: list[list[int]], root: int) -> tuple[list[int], list[int]]:
    n = len(adj_list)
    dist = [-1] * n
    parent = [-1] * n
    dist[root] = 0
    dq = deque([root])
    while dq:
        x = dq.popleft()
        for y in adj_list[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                parent[y] = x
                dq.append(y)
    return dist, parent


def _insert(basis: dict[int, int], vec: int) -> bool:
    """Gaussian elimination over GF(2); returns True if ``vec`` was independent."""
    while vec:
        pivot = vec.bit_length() - 1
        if pivot not in basis:
            basis[pivot] = vec
            return True
        vec ^= basis[pivot]
    return False


def minimum_cycle_basis(adj: np.ndarray) -> list[tuple[int, int]]:
    """``(length, edge_bitmask)`` for each cycle of a minimum cycle basis."""
    adj = np.asarray(adj)
    n = adj.shape[0]
    eidx = _edge_index(adj)
    m = len(eidx)
    n_comp = connected_components(csr_matrix(adj), directed=False)[0] if n else 0
    rank = m - n + n_comp
    if rank <= 0:
        return []
    adj_list = [sorted(np.flatnonzero(adj[i]).tolist()) for i in range(n)]

    def key(a, b):
        return eidx[(a, b) if a < b else (b, a)]

    candidates: set[tuple[int, int]] = set()
    for root in range(n):
        dist, parent = _bfs_tree(adj_list, root)
        paths: list[tuple[int, set[int]] | None] = [None] * n
        for x in sorted(range(n), key=lambda i: dist[i]):
            if dist[x] < 0:
                continue
            if x == root:
                paths[x] = (0, {root})
            else:
                mask, verts = paths[parent[x]]
                paths[x] = (mask | (1 << key(x, parent[x])), verts | {x})
        for (a, b), k in eidx.items():
            if dist[a] < 0 or parent[a] == b or parent[b] == a:
                continue
            (ma, va), (mb, vb) = paths[a], paths[b]
            if va & vb != {root}:
                continue
            length = dist[a] + dist[b] + 1
            candidates.add((length, ma | mb | (1 << k)))

    basis: dict[int, int] = {}
    chosen = []
    for length, mask in sorted(candidates):
        if _insert(basis, mask):
            chosen.append((length, mask))
            if len(chosen) == rank:
                break
    return chosen


def ring_sizes(adj: np.ndarray) -> list[int]:
    """Sorted cycle lengths of a minimum cycle basis (empty for forests)."""
    return sorted(length for length, _ in minimum_cycle_basis(adj))


def circuit_sizes(adj: np.ndarray) -> list[int]:
    """Lengths of every simple cycle; exponential in the worst case."""
    import networkx as nx

    G = nx.from_numpy_array(np.asarray(adj))
    return sorted(len(c) for c in nx.simple_cycles(G))


def longest_circuit_over(adj: np.ndarray, bound: int) -> int:
    """Length of some simple cycle longer than ``bound``, or 0 if none exists.

    Depth-first search over simple paths anchored at their smallest vertex,
    stopping at the first long cycle. Dense graphs hit one almost at once;
    the exhaustive case only arises for sparse graphs with few circuits.
    """
    adj = np.asarray(adj)
    n = adj.shape[0]
    nbrs = [np.flatnonzero(adj[i]).tolist() for i in range(n)]
    for s in range(n):
        on_path = [False] * n
        on_path[s] = True
        stack = [(s, iter(nbrs[s]), 1)]
        while stack:
            x, it, depth = stack[-1]
            for y in it:
                if y == s and depth > bound and depth >= 3:
                    return depth
                if y > s and not on_path[y]:
                    on_path[y] = True
                    stack.append((y, iter(nbrs[y]), depth + 1))
                    break
            else:
                on_path[x] = False
                stack.pop()
    return 0


# -------------------------------------------------------------- verdicts


def check_validity(adj: np.ndarray, cfg: ValidityConfig = ValidityConfig()) -> ValidityVerdict:
    """Judge an already-discretised, connected binary graph."""
    adj = np.asarray(adj)
    n = adj.shape[0]
    deg = np.count_nonzero(adj, axis=1) if n else np.zeros(0, dtype=int)
    rings = ring_sizes(adj)
    largest = max(rings) if rings else 0
    if cfg.all_circuits and largest <= cfg.max_ring_size:
        largest = max(largest, longest_circuit_over(adj, cfg.max_ring_size))
    failed = []
    if n <= cfg.min_atoms:
        failed.append(TOO_SMALL)
    if largest > cfg.max_ring_size:
        failed.append(RING_TOO_LARGE)
    if n and deg.max() > cfg.max_degree:
        failed.append(DEGREE_TOO_HIGH)
    return ValidityVerdict(
        valid=not failed,
        failed_rules=failed,
        component_size=int(n),
        largest_ring=int(largest),
        max_degree_found=int(deg.max()) if n else 0,
    )


def judge(W: np.ndarray, cfg: ValidityConfig = ValidityConfig()) -> tuple[Discretized, ValidityVerdict]:
    d = discretize(W, cfg.threshold)
    return d, check_validity(d.adjacency, cfg)


def validity_fraction(samples: Iterable[np.ndarray | ValidityVerdict], cfg: ValidityConfig = ValidityConfig()) -> float:
    verdicts = [s if isinstance(s, ValidityVerdict) else judge(s, cfg)[1] for s in samples]
    if not verdicts:
        raise EmptySampleSet("validity fraction of an empty sample set")
    return sum(v.valid for v in verdicts) / len(verdicts)


def rule_summary(verdicts: Sequence[ValidityVerdict]) -> dict[str, int]:
    out = {"total": len(verdicts), "valid": sum(v.valid for v in verdicts)}
    for rule in (TOO_SMALL, RING_TOO_LARGE, DEGREE_TOO_HIGH):
        out[rule] = sum(rule in v.failed_rules for v in verdicts)
    return out
