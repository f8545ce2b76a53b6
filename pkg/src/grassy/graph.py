"""Molecular graphs, the lazy random walk, and label signals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    GraphError,
    GraphTooLarge,
    InvalidPermutation,
    OutOfRangeNode,
    SelfLoop,
    UnknownLabel,
)

DEFAULT_SYMBOLS = ("C", "N", "O", "S", "F", "Cl", "Br", "I", "P", "B")


@dataclass(frozen=True)
class AtomAlphabet:
    symbols: tuple[str, ...] = DEFAULT_SYMBOLS

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if not self.symbols:
            raise ValueError("alphabet must contain at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError(f"duplicate symbols in alphabet {self.symbols}")

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise UnknownLabel(f"symbol {symbol!r} not in alphabet {self.symbols}") from None


DEFAULT_ALPHABET = AtomAlphabet()


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MolecularGraph:
    """Undirected heavy-atom graph with integer atom labels.

    ``bond_orders`` maps ``(u, v)`` with ``u < v`` to the bond order (1.5 aromatic). It is
    kept for reporting only and never enters the diffusion operator.
    """

    adjacency: np.ndarray
    labels: np.ndarray
    alphabet: AtomAlphabet = DEFAULT_ALPHABET
    properties: Mapping[str, float] = field(default_factory=dict)
    bond_orders: Mapping[tuple[int, int], float] = field(default_factory=dict)
    id: str | None = None

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise GraphError(f"adjacency must be square, got shape {adj.shape}")
        n = adj.shape[0]
        if n < 1:
            raise GraphError("graph must have at least one node")
        if labels.shape[0] != n:
            raise DimensionMismatch(f"{labels.shape[0]} labels for {n} nodes")
        if not np.array_equal(adj, adj.T):
            raise GraphError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise SelfLoop("adjacency diagonal must be zero")
        if np.any(adj < 0):
            raise GraphError("adjacency must be nonnegative")
        if np.any(labels < 0) or np.any(labels >= len(self.alphabet)):
            raise UnknownLabel(f"label index out of range for alphabet of size {len(self.alphabet)}")
        object.__setattr__(self, "adjacency", _frozen(adj))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "properties", dict(self.properties))
        object.__setattr__(self, "bond_orders", dict(self.bond_orders))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency)))

    def edges(self) -> list[tuple[int, int]]:
        u, v = np.nonzero(np.triu(self.adjacency))
        return list(zip(u.tolist(), v.tolist()))

    def degrees(self) -> np.ndarray:
        return np.count_nonzero(self.adjacency, axis=1)

    def symbols(self) -> list[str]:
        return [self.alphabet.symbols[i] for i in self.labels]

    def with_properties(self, properties: Mapping[str, float]) -> "MolecularGraph":
        return MolecularGraph(
            self.adjacency, self.labels, self.alphabet, properties, self.bond_orders, self.id
        )

    def __repr__(self) -> str:
        name = f" {self.id!r}" if self.id is not None else ""
        return f"<MolecularGraph{name} n={self.n} edges={self.n_edges}>"


def build_graph(
    edges: Iterable[tuple[int, int]],
    labels: Sequence[int | str],
    alphabet: AtomAlphabet = DEFAULT_ALPHABET,
    properties: Mapping[str, float] | None = None,
    bond_orders: Mapping[tuple[int, int], float] | None = None,
    id: str | None = None,
) -> MolecularGraph:
    """Build a binary-adjacency graph; labels may be indices or symbols.

    >>> build_graph([(0, 1), (1, 0)], ["C", "C"]).adjacency
    array([[0., 1.],
           [1., 0.]])
    """
    idx = [alphabet.index(l) if isinstance(l, str) else int(l) for l in labels]
    n = len(idx)
    adj = np.zeros((n, n))
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise OutOfRangeNode(f"edge ({u}, {v}) outside node range 0..{n - 1}")
        if u == v:
            raise SelfLoop(f"self loop on node {u}")
        adj[u, v] = adj[v, u] = 1.0
    return MolecularGraph(adj, idx, alphabet, properties or {}, bond_orders or {}, id)


class DiffusionOperator:
    """Column-stochastic lazy random walk ``P = (I + W D^-1) / 2``.

    Powers are cached by exponent. ``apply`` never forms a power that has not
    been cached; it falls back to repeated matrix-vector products.
    """

    def __init__(self, P: np.ndarray):
        self.P = _frozen(np.array(P, dtype=np.float64))
        self._powers: dict[int, np.ndarray] = {0: _frozen(np.eye(self.n)), 1: self.P}

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def power(self, t: int) -> np.ndarray:
        """Dense ``P**t`` built by repeated multiplication from the nearest cached power."""
        if t < 0:
            raise ValueError("diffusion time must be nonnegative")
        if t not in self._powers:
            base = max(k for k in self._powers if k <= t)
            M = self._powers[base]
            for k in range(base + 1, t + 1):
                M = _frozen(self.P @ M)
                self._powers[k] = M
        return self._powers[t]

    def apply(self, x: np.ndarray, t: int) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.n:
            raise DimensionMismatch(f"signal of length {x.shape[0]} for operator of size {self.n}")
        if t < 0:
            raise ValueError("diffusion time must be nonnegative")
        if t in self._powers:
            return self._powers[t] @ x
        base = max(k for k in self._powers if k <= t)
        y = self._powers[base] @ x
        for _ in range(t - base):
            y = self.P @ y
        return y


def lazy_walk(g: MolecularGraph) -> DiffusionOperator:
    W = g.adjacency
    deg = W.sum(axis=0)
    n = g.n
    WD = np.zeros((n, n))
    nz = deg > 0
    WD[:, nz] = W[:, nz] / deg[nz]
    # isolated node: the walk stays put
    iso = np.flatnonzero(~nz)
    WD[iso, iso] = 1.0
    return DiffusionOperator(0.5 * (np.eye(n) + WD))


def diffuse(P: DiffusionOperator, x: np.ndarray, t: int) -> np.ndarray:
    return P.apply(x, t)


def label_signals(g: MolecularGraph, alphabet: AtomAlphabet | None = None) -> np.ndarray:
    """One-hot indicator per alphabet symbol, returned as an ``n x len(alphabet)`` matrix."""
    a = alphabet or g.alphabet
    if a != g.alphabet:
        # remap through symbols so graphs built on another alphabet still work
        idx = np.array([a.index(s) for s in g.symbols()], dtype=np.int64)
    else:
        idx = g.labels
    X = np.zeros((g.n, len(a)))
    X[np.arange(g.n), idx] = 1.0
    return X


def pad_adjacency(g: MolecularGraph | np.ndarray, n_max: int) -> np.ndarray:
    A = g.adjacency if isinstance(g, MolecularGraph) else np.asarray(g, dtype=np.float64)
    n = A.shape[0]
    if n > n_max:
        raise GraphTooLarge(f"graph with {n} nodes exceeds n_max={n_max}")
    out = np.zeros((n_max, n_max))
    out[:n, :n] = A
    return out


def permute(g: MolecularGraph, perm: Sequence[int]) -> MolecularGraph:
    """Relabel nodes so that old node ``i`` becomes new node ``perm[i]``."""
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (g.n,) or not np.array_equal(np.sort(perm), np.arange(g.n)):
        raise InvalidPermutation(f"not a permutation of 0..{g.n - 1}: {perm.tolist()}")
    inv = np.argsort(perm)
    adj = g.adjacency[np.ix_(inv, inv)]
    labels = g.labels[inv]
    bonds = {}
    for (u, v), order in g.bond_orders.items():
        a, b = int(perm[u]), int(perm[v])
        bonds[(min(a, b), max(a, b))] = order
    return MolecularGraph(adj, labels, g.alphabet, g.properties, bonds, g.id)
