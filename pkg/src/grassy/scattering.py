"""Diffusion wavelets and permutation-invariant scattering moments.

Moments are raw vertex sums of ``|.|**q``. For every label signal ``x`` and
every ``q`` in ``1..Q`` the feature vector holds

* zeroth order ``sum |x|**q``
* first order ``sum |Psi_j x|**q`` for ``j = 1..J``
* second order ``sum |Psi_jp |Psi_j x| |**q`` for all ``1 <= j, jp <= J``
  (or only ``jp > j`` when ``include_all_second_order_pairs`` is off).

Two banks are available. The dyadic bank uses ``Psi_0 = I - P`` and
``Psi_j = P**(2**(j-1)) - P**(2**j)``. The learned bank replaces the dyadic
exponents by selector rows ``F`` over diffusion steps ``0..T``:
``Psi_j = sum_t (F[j, t] - F[j+1, t]) P**t`` where the row after the last is a
fixed one-hot at ``T``. With ``T = 2**J`` and one-hot rows at ``0, 1, 2, 4, ...``
the learned bank is exactly the dyadic one.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import BankGraphMismatch, FeaturizationError, NotRowStochastic
from .graph import DEFAULT_ALPHABET, AtomAlphabet, DiffusionOperator, MolecularGraph, label_signals, lazy_walk


@dataclass(frozen=True)
class ScatteringConfig:
    J: int = 4
    Q: int = 2
    T: int = 16
    mode: str = "dyadic"
    include_all_second_order_pairs: bool = True
    include_zeroth_order: bool = True

    def __post_init__(self):
        if self.J < 1:
            raise ValueError(f"J must be >= 1, got {self.J}")
        if self.Q < 1:
            raise ValueError(f"Q must be >= 1, got {self.Q}")
        if self.mode not in ("dyadic", "learned"):
            raise ValueError(f"mode must be 'dyadic' or 'learned', got {self.mode!r}")
        if self.mode == "learned" and self.T < 2**self.J:
            raise ValueError(f"learned scales need T >= 2**J = {2 ** self.J}, got T={self.T}")

    def pairs(self) -> list[tuple[int, int]]:
        J = self.J
        if self.include_all_second_order_pairs:
            return [(j, jp) for j in range(1, J + 1) for jp in range(1, J + 1)]
        return [(j, jp) for j in range(1, J + 1) for jp in range(j + 1, J + 1)]


def feature_dimension(cfg: ScatteringConfig, n_signals: int) -> int:
    per_q = int(cfg.include_zeroth_order) + cfg.J + len(cfg.pairs())
    return n_signals * cfg.Q * per_q


def feature_index(cfg: ScatteringConfig, alphabet: AtomAlphabet) -> list[tuple[str, int, int, int, int]]:
    """``(symbol, order, j, jp, q)`` for every feature position; unused ``j``/``jp`` are 0."""
    index = []
    for sym in alphabet.symbols:
        if cfg.include_zeroth_order:
            index.extend((sym, 0, 0, 0, q) for q in range(1, cfg.Q + 1))
        for j in range(1, cfg.J + 1):
            index.extend((sym, 1, j, 0, q) for q in range(1, cfg.Q + 1))
        for j, jp in cfg.pairs():
            index.extend((sym, 2, j, jp, q) for q in range(1, cfg.Q + 1))
    return index


def feature_names(cfg: ScatteringConfig, alphabet: AtomAlphabet) -> list[str]:
    names = []
    for sym, order, j, jp, q in feature_index(cfg, alphabet):
        parts = [sym, f"o{order}"]
        if order >= 1:
            parts.append(f"j{j}")
        if order == 2:
            parts.append(f"jp{jp}")
        parts.append(f"q{q}")
        names.append("|".join(parts))
    return names


# ------------------------------------------------------------------- banks


class WaveletBank:
    """Wavelet operators ``Psi_0..Psi_J`` materialised for one graph."""

    def __init__(self, P: DiffusionOperator, operators: Sequence[np.ndarray], selector: np.ndarray | None = None):
        self.P = P
        self.operators = [np.asarray(op) for op in operators]
        self.selector = selector

    @property
    def J(self) -> int:
        return len(self.operators) - 1

    @property
    def n(self) -> int:
        return self.P.n

    def apply(self, j: int, x: np.ndarray) -> np.ndarray:
        return self.operators[j] @ x


def build_dyadic_bank(P: DiffusionOperator, J: int) -> WaveletBank:
    if J < 1:
        raise ValueError(f"J must be >= 1, got {J}")
    ops = [np.eye(P.n) - P.P]
    for j in range(1, J + 1):
        ops.append(P.power(2 ** (j - 1)) - P.power(2**j))
    return WaveletBank(P, ops)


def dyadic_selector(J: int, T: int | None = None) -> np.ndarray:
    """One-hot selector rows at steps ``0, 1, 2, 4, ..., 2**(J-1)``."""
    T = 2**J if T is None else T
    F = np.zeros((J + 1, T + 1))
    F[0, 0] = 1.0
    for j in range(1, J + 1):
        F[j, 2 ** (j - 1)] = 1.0
    return F


def selector_differences(F: np.ndarray) -> np.ndarray:
    """Rows ``F[j] - F[j+1]``, with a one-hot at ``T`` standing in after the last row."""
    nxt = np.zeros_like(F)
    nxt[:-1] = F[1:]
    nxt[-1, -1] = 1.0
    return F - nxt


def _check_selector(F: np.ndarray, J: int | None = None) -> None:
    if F.ndim != 2 or F.shape[0] < 2 or F.shape[1] < 2:
        raise NotRowStochastic(f"selector must be a (J+1) x (T+1) matrix, got shape {F.shape}")
    if J is not None and F.shape[0] != J + 1:
        raise NotRowStochastic(f"selector has {F.shape[0]} rows, expected J+1 = {J + 1}")
    if np.any(F < -1e-12) or np.any(np.abs(F.sum(axis=1) - 1.0) > 1e-9):
        raise NotRowStochastic("selector rows must be nonnegative and sum to 1")


def build_learned_bank(P: DiffusionOperator, F: np.ndarray) -> WaveletBank:
    F = np.asarray(F, dtype=np.float64)
    _check_selector(F)
    G = selector_differences(F)
    T = F.shape[1] - 1
    powers = [P.power(t) for t in range(T + 1)]
    ops = []
    for row in G:
        op = np.zeros((P.n, P.n))
        for t in np.flatnonzero(row):
            op += row[t] * powers[t]
        ops.append(op)
    return WaveletBank(P, ops, selector=F)


class LearnedScales:
    """Trainable selector ``F = softmax(logits)`` over diffusion steps ``0..T``.

    ``sharpness`` is the logit given to the dyadic step of each row; the rest
    start at 0. Large values approach the exact dyadic bank but leave little
    gradient, so training uses a moderate value.
    """

    def __init__(self, J: int, T: int, sharpness: float = 4.0, logits: np.ndarray | None = None):
        if logits is None:
            logits = sharpness * dyadic_selector(J, T)
        self.logits = Tensor(logits, requires_grad=True, name="scattering.selector_logits")
        self.J, self.T = J, T

    def selector_tensor(self) -> Tensor:
        return ad.softmax_rows(self.logits)

    def selector(self) -> np.ndarray:
        with ad.no_grad():
            return self.selector_tensor().value

    def parameters(self) -> list[Tensor]:
        return [self.logits]


def build_bank(g: MolecularGraph, cfg: ScatteringConfig, scales: LearnedScales | np.ndarray | None = None) -> WaveletBank:
    P = lazy_walk(g)
    if cfg.mode == "dyadic":
        return build_dyadic_bank(P, cfg.J)
    if scales is None:
        F = dyadic_selector(cfg.J, cfg.T)
    elif isinstance(scales, LearnedScales):
        F = scales.selector()
    else:
        F = np.asarray(scales)
    _check_selector(F, cfg.J)
    return build_learned_bank(P, F)


# ------------------------------------------------------------------ moments


def _raw_layout(cfg: ScatteringConfig, L: int) -> tuple[np.ndarray, int]:
    """Gather indices taking the raw computation layout to the canonical order.

    Raw layout: zeroth ``[q, s]``, then first ``[q, j, s]``, then second
    ``[q, jp, j, s]`` over all ``J*J`` pairs.
    """
    J, Q = cfg.J, cfg.Q
    off1 = Q * L
    off2 = off1 + Q * J * L
    total = off2 + Q * J * J * L
    gather = []
    for s in range(L):
        if cfg.include_zeroth_order:
            gather.extend(q * L + s for q in range(Q))
        for j in range(1, J + 1):
            gather.extend(off1 + (q * J + (j - 1)) * L + s for q in range(Q))
        for j, jp in cfg.pairs():
            gather.extend(off2 + ((q * J + (jp - 1)) * J + (j - 1)) * L + s for q in range(Q))
    return np.array(gather, dtype=np.int64), total


def _check_bank(g: MolecularGraph, bank: WaveletBank, cfg: ScatteringConfig) -> None:
    if bank.n != g.n:
        raise BankGraphMismatch(f"bank built for {bank.n} nodes, graph has {g.n}")
    if bank.J != cfg.J:
        raise BankGraphMismatch(f"bank has J={bank.J}, config has J={cfg.J}")
    if not np.allclose(bank.P.P, lazy_walk(g).P, rtol=0, atol=1e-14):
        raise BankGraphMismatch("bank was built from a different graph")


def scattering_moments(
    g: MolecularGraph,
    bank: WaveletBank,
    cfg: ScatteringConfig,
    alphabet: AtomAlphabet | None = None,
) -> np.ndarray:
    _check_bank(g, bank, cfg)
    X = label_signals(g, alphabet)
    L = X.shape[1]
    qs = range(1, cfg.Q + 1)
    zeroth = [np.sum(np.abs(X) ** q, axis=0) for q in qs]
    Y = [bank.apply(j, X) for j in range(1, cfg.J + 1)]
    U = [np.abs(y) for y in Y]
    first = [np.sum(u**q, axis=0) for q in qs for u in U]
    V = [np.abs(bank.apply(jp, u)) for jp in range(1, cfg.J + 1) for u in U]
    second = [np.sum(v**q, axis=0) for q in qs for v in V]
    raw = np.concatenate(zeroth + first + second)
    gather, total = _raw_layout(cfg, L)
    assert raw.size == total
    return raw[gather]


def scattering_for_graph(
    g: MolecularGraph,
    cfg: ScatteringConfig,
    alphabet: AtomAlphabet | None = None,
    scales: LearnedScales | np.ndarray | None = None,
) -> np.ndarray:
    return scattering_moments(g, build_bank(g, cfg, scales), cfg, alphabet)


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("GRASSY_THREADS", "1")))
    except ValueError:
        return 1


def featurize_dataset(
    graphs: Sequence[MolecularGraph],
    cfg: ScatteringConfig,
    alphabet: AtomAlphabet | None = None,
    scales: LearnedScales | np.ndarray | None = None,
    workers: int | None = None,
) -> np.ndarray:
    """Stack per-graph moments into an ``(N, feature_dimension)`` matrix.

    Row order follows ``graphs`` whatever the worker count. ``GRASSY_THREADS``
    sets the default number of workers.
    """
    if alphabet is None:
        alphabet = graphs[0].alphabet if graphs else DEFAULT_ALPHABET
    dim = feature_dimension(cfg, len(alphabet))
    if not graphs:
        return np.zeros((0, dim))
    if isinstance(scales, LearnedScales):
        scales = scales.selector()

    def one(item):
        i, g = item
        try:
            return scattering_for_graph(g, cfg, alphabet, scales)
        except Exception as exc:
            raise FeaturizationError(g.id if g.id is not None else i, exc) from exc

    workers = workers or _worker_count()
    items = list(enumerate(graphs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, items))
    else:
        rows = [one(it) for it in items]
    return np.vstack(rows)


# ------------------------------------------------- differentiable moments


class DiffusionCache:
    """Per-graph constants for the differentiable learned-scale path."""

    def __init__(self, g: MolecularGraph, cfg: ScatteringConfig, alphabet: AtomAlphabet | None = None):
        self.cfg = cfg
        P = lazy_walk(g)
        self.P = P.P
        self.X = label_signals(g, alphabet)
        self.n, self.L = self.X.shape
        # row t holds vec(P^t X), row-major over (node, signal)
        self.stack = np.vstack([P.apply(self.X, t).reshape(1, -1) for t in range(cfg.T + 1)])
        self.gather, _ = _raw_layout(cfg, self.L)
        self.zeroth = np.concatenate([np.sum(np.abs(self.X) ** q, axis=0) for q in range(1, cfg.Q + 1)])


def _node_sum(n: int, width: int) -> np.ndarray:
    S = np.zeros((n * width, width))
    for v in range(n):
        S[v * width : (v + 1) * width] = np.eye(width)
    return S


def scattering_tensor(cache: DiffusionCache, scales: LearnedScales) -> Tensor:
    """Moments of one graph as a ``(1, D)`` tensor differentiable in the selector logits."""
    cfg, n, L = cache.cfg, cache.n, cache.L
    J = cfg.J
    F = scales.selector_tensor()
    nxt = np.zeros((J + 1, J + 1))
    nxt[np.arange(J), np.arange(1, J + 1)] = 1.0
    terminal = np.zeros((J + 1, cfg.T + 1))
    terminal[J, cfg.T] = 1.0
    G = ad.sub(ad.sub(F, ad.matmul(nxt, F)), terminal)

    # first order: row j-1 of R1 is vec(Psi_j X)
    R1 = ad.matmul(ad.slice_(G, (slice(1, J + 1),)), cache.stack)
    U1 = ad.abs_pow(R1, 1.0)
    S1 = _node_sum(n, L)
    first = [ad.matmul(ad.abs_pow(R1, q), S1) for q in range(1, cfg.Q + 1)]

    # second order on columns (j, s) of an n x (J*L) matrix
    Ucols = ad.concat([ad.reshape(ad.slice_(U1, (slice(j, j + 1),)), (n, L)) for j in range(J)], axis=1)
    powers = [Ucols]
    for _ in range(cfg.T):
        powers.append(ad.matmul(cache.P, powers[-1]))
    stack2 = ad.concat([ad.reshape(p, (1, n * J * L)) for p in powers], axis=0)
    R2 = ad.matmul(ad.slice_(G, (slice(1, J + 1),)), stack2)
    S2 = _node_sum(n, J * L)
    second = [ad.matmul(ad.abs_pow(R2, q), S2) for q in range(1, cfg.Q + 1)]

    parts = [Tensor(cache.zeroth.reshape(1, -1))]
    parts += [ad.reshape(m, (1, -1)) for m in first]
    parts += [ad.reshape(m, (1, -1)) for m in second]
    raw = ad.concat(parts, axis=1)
    return ad.slice_(raw, (slice(None), cache.gather))
