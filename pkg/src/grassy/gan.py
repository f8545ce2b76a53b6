"""Latent-interpolation adjacency generator with a GCN discriminator.

The generator ``M`` is an MLP from a latent code to the ``n_max*(n_max-1)/2``
upper-triangle logits of a padded adjacency. Sigmoid entries are scattered
into a symmetric matrix whose diagonal is exactly zero.

For a pair of encoded training graphs the generator is trained on

* ``L_m``: Frobenius distance of the endpoint outputs to the padded adjacencies,
* ``L_a``: ``sum_k -log D(M(z(k/K)))`` along the interpolation trajectory,
* ``L_s``: ``sum_k ||K (F(z((k+1)/K)) - F(z(k/K)))||^2`` with the frozen decoder ``F``.

``L_s`` depends only on the frozen autoencoder and the endpoint codes, so it is
logged but carries no gradient to ``M``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import AlphaOutOfRange, DatasetTooSmall, DimensionMismatch, EmptyBatch, GraphTooLarge
from .graph import MolecularGraph, pad_adjacency
from .latent import LatentModel, encode
from .nn import MLP, Adam, Dense, atomic_write, load_params, save_params

D_CLAMP = 1e-7


@dataclass
class GeneratorConfig:
    n_max: int
    latent_dim: int = 32
    K: int = 8
    w_m: float = 1.0
    w_a: float = 0.1
    w_s: float = 0.1
    generator_hidden: tuple[int, ...] = (128, 256)
    discriminator_hidden: int = 32
    threshold: float = 0.5
    sigma: float = 0.1
    lr_generator: float = 1e-3
    lr_discriminator: float = 1e-3
    steps: int = 1000
    pairs_per_step: int = 4

    def __post_init__(self):
        self.generator_hidden = tuple(self.generator_hidden)
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if self.pairs_per_step < 1:
            raise ValueError("pairs_per_step must be >= 1")


def upper_to_symmetric(n: int) -> np.ndarray:
    """Constant ``(n(n-1)/2, n*n)`` map from upper-triangle entries to a flat symmetric matrix."""
    iu, ju = np.triu_indices(n, k=1)
    E = np.zeros((len(iu), n * n))
    k = np.arange(len(iu))
    E[k, iu * n + ju] = 1.0
    E[k, ju * n + iu] = 1.0
    return E


class Discriminator:
    """Two GCN layers on soft-degree node features, mean pooling, sigmoid head."""

    def __init__(self, hidden: int, rng: np.random.Generator):
        self.gc1 = Dense(1, hidden, rng, "disc.gc1")
        self.gc2 = Dense(hidden, hidden, rng, "disc.gc2")
        self.head = Dense(hidden, 1, rng, "disc.head")

    def parameters(self) -> list[Tensor]:
        return self.gc1.parameters() + self.gc2.parameters() + self.head.parameters()

    def __call__(self, W) -> Tensor:
        W = ad.as_tensor(W)
        n = W.shape[0]
        ones = np.ones((n, 1))
        A = ad.add(W, np.eye(n))
        s = ad.power(ad.matmul(A, ones), -0.5)
        A_hat = ad.mul(A, ad.matmul(s, ad.transpose(s)))
        h = ad.matmul(W, ones)
        h = ad.relu(self.gc1(ad.matmul(A_hat, h)))
        h = ad.relu(self.gc2(ad.matmul(A_hat, h)))
        pooled = ad.matmul(np.full((1, n), 1.0 / n), h)
        return ad.sigmoid(self.head(pooled))


class GeneratorModel:
    def __init__(self, config: GeneratorConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        n = config.n_max
        self.m = n * (n - 1) // 2
        self.generator = MLP([config.latent_dim, *config.generator_hidden, self.m], rng, name="generator")
        self.discriminator = Discriminator(config.discriminator_hidden, rng)
        self._E = upper_to_symmetric(n)

    def generator_parameters(self) -> list[Tensor]:
        return self.generator.parameters()

    def discriminator_parameters(self) -> list[Tensor]:
        return self.discriminator.parameters()

    def generate_flat(self, Z) -> Tensor:
        """Rows of flattened soft adjacencies, one per latent row."""
        Z = ad.as_tensor(Z)
        if Z.value.ndim != 2 or Z.shape[1] != self.config.latent_dim:
            raise DimensionMismatch(f"expected latent rows of size {self.config.latent_dim}, got {Z.shape}")
        return ad.matmul(ad.sigmoid(self.generator(Z)), self._E)

    def as_matrix(self, flat: Tensor, row: int) -> Tensor:
        n = self.config.n_max
        return ad.reshape(ad.slice_(flat, (slice(row, row + 1),)), (n, n))

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.value.copy() for p in self.generator_parameters() + self.discriminator_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for p in self.generator_parameters() + self.discriminator_parameters():
            p.value = np.array(state[p.name], dtype=np.float64)


def interpolate(z_i, z_j, alpha: float) -> np.ndarray:
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha}")
    z_i, z_j = np.asarray(z_i, dtype=np.float64), np.asarray(z_j, dtype=np.float64)
    if z_i.shape != z_j.shape:
        raise DimensionMismatch(f"endpoint shapes differ: {z_i.shape} vs {z_j.shape}")
    if alpha == 0.0:
        return z_i.copy()
    if alpha == 1.0:
        return z_j.copy()
    return (1.0 - alpha) * z_i + alpha * z_j


def trajectory(z_i, z_j, K: int) -> Tensor:
    """``(K+1, d)`` tensor of the points ``z(k/K)``, differentiable in the endpoints."""
    z_i, z_j = ad.as_tensor(z_i), ad.as_tensor(z_j)
    zi = ad.reshape(z_i, (1, -1))
    zj = ad.reshape(z_j, (1, -1))
    alphas = np.arange(K + 1, dtype=np.float64).reshape(-1, 1) / K
    # exact endpoints: rows 0 and K reproduce z_i and z_j bitwise
    return ad.add(ad.matmul(1.0 - alphas, zi), ad.matmul(alphas, zj))


def generate_adjacency(gm: GeneratorModel, z) -> np.ndarray:
    n = gm.config.n_max
    with ad.no_grad():
        flat = gm.generate_flat(np.atleast_2d(z)).value
    out = flat.reshape(-1, n, n)
    return out[0] if np.ndim(z) == 1 else out


# ------------------------------------------------------------------ losses


def loss_adjacency(gm: GeneratorModel, g_i, g_j, z_i, z_j) -> Tensor:
    n = gm.config.n_max
    targets = []
    for g in (g_i, g_j):
        A = g.adjacency if isinstance(g, MolecularGraph) else np.asarray(g)
        if A.shape[0] > n:
            raise GraphTooLarge(f"graph with {A.shape[0]} nodes exceeds n_max={n}")
        targets.append(pad_adjacency(A, n).reshape(1, -1))
    Z = ad.concat([ad.reshape(ad.as_tensor(z_i), (1, -1)), ad.reshape(ad.as_tensor(z_j), (1, -1))], axis=0)
    flat = gm.generate_flat(Z)
    li = ad.frobenius_norm(ad.sub(ad.slice_(flat, (slice(0, 1),)), targets[0]))
    lj = ad.frobenius_norm(ad.sub(ad.slice_(flat, (slice(1, 2),)), targets[1]))
    return ad.add(li, lj)


def adversarial_from_scores(scores: Sequence[Tensor]) -> Tensor:
    total = None
    for d in scores:
        term = ad.mul(ad.log(ad.clip(d, D_CLAMP, 1.0 - D_CLAMP)), -1.0)
        total = term if total is None else ad.add(total, term)
    return ad.sum_(total)


def loss_adversarial(gm: GeneratorModel, z_i, z_j) -> Tensor:
    K = gm.config.K
    flat = gm.generate_flat(trajectory(z_i, z_j, K))
    return adversarial_from_scores([gm.discriminator(gm.as_matrix(flat, k)) for k in range(K + 1)])


def loss_smoothness(decoder, z_i, z_j, K: int) -> Tensor:
    S = decoder(trajectory(z_i, z_j, K))
    diff = ad.mul(ad.sub(ad.slice_(S, (slice(1, K + 1),)), ad.slice_(S, (slice(0, K),))), float(K))
    return ad.sum_(ad.mul(diff, diff))


def discriminator_loss(gm: GeneratorModel, real: Sequence, fake: Sequence) -> Tensor:
    """Mean binary cross-entropy of real (label 1) and fake (label 0) adjacencies, averaged."""
    if not real or not fake:
        raise EmptyBatch("discriminator loss needs real and fake samples")
    D = gm.discriminator
    lr = None
    for W in real:
        t = ad.log(ad.clip(D(W), D_CLAMP, 1.0 - D_CLAMP))
        lr = t if lr is None else ad.add(lr, t)
    lf = None
    for W in fake:
        t = ad.log(ad.clip(ad.add(ad.mul(D(W), -1.0), 1.0), D_CLAMP, 1.0 - D_CLAMP))
        lf = t if lf is None else ad.add(lf, t)
    return ad.mul(ad.add(ad.mul(lr, 1.0 / len(real)), ad.mul(lf, 1.0 / len(fake))), -0.5)


# ---------------------------------------------------------------- training


@dataclass
class GanHistory:
    rows: list[dict[str, float]] = field(default_factory=list)

    def column(self, name: str) -> list[float]:
        return [r[name] for r in self.rows]


def train_gan(
    cfg: GeneratorConfig,
    latent: LatentModel,
    graphs: Sequence[MolecularGraph],
    features: np.ndarray,
    seed: int = 0,
    log=None,
) -> tuple[GeneratorModel, GanHistory]:
    """Alternate one discriminator step and one generator step per iteration.

    Each step draws ``pairs_per_step`` index pairs uniformly from a generator
    seeded with ``seed``; the latent model stays frozen throughout.
    """
    if len(graphs) < 2:
        raise DatasetTooSmall("need at least two graphs to form interpolation pairs")
    if max(g.n for g in graphs) > cfg.n_max:
        raise GraphTooLarge(f"largest graph has {max(g.n for g in graphs)} nodes, n_max={cfg.n_max}")
    rng = np.random.default_rng(seed)
    gm = GeneratorModel(cfg, seed=seed)
    Z = encode(latent, features)
    padded = [pad_adjacency(g, cfg.n_max) for g in graphs]
    K, N = cfg.K, len(graphs)
    opt_g = Adam(gm.generator_parameters(), lr=cfg.lr_generator)
    opt_d = Adam(gm.discriminator_parameters(), lr=cfg.lr_discriminator)
    hist = GanHistory()

    for step in range(1, cfg.steps + 1):
        pairs = rng.integers(0, N, size=(cfg.pairs_per_step, 2))

        # discriminator: real endpoints vs detached interpolants
        with ad.no_grad():
            fakes = [
                generate_adjacency(gm, trajectory(Z[i], Z[j], K).value) for i, j in pairs
            ]
        fake_list = [W for stack in fakes for W in stack]
        real_list = [padded[i] for pair in pairs for i in pair]
        opt_d.zero_grad()
        ld = discriminator_loss(gm, real_list, fake_list)
        ad.backward(ld)
        opt_d.step()

        # generator
        opt_g.zero_grad()
        lm_total = la_total = ls_total = None
        for i, j in pairs:
            traj = trajectory(Z[i], Z[j], K)
            flat = gm.generate_flat(traj)
            lm = ad.add(
                ad.frobenius_norm(ad.sub(ad.slice_(flat, (slice(0, 1),)), padded[i].reshape(1, -1))),
                ad.frobenius_norm(ad.sub(ad.slice_(flat, (slice(K, K + 1),)), padded[j].reshape(1, -1))),
            )
            la = adversarial_from_scores([gm.discriminator(gm.as_matrix(flat, k)) for k in range(K + 1)])
            with ad.no_grad():
                ls = loss_smoothness(latent.decoder, Z[i], Z[j], K)
            lm_total = lm if lm_total is None else ad.add(lm_total, lm)
            la_total = la if la_total is None else ad.add(la_total, la)
            ls_total = ls.item() + (0.0 if ls_total is None else ls_total)
        B = float(len(pairs))
        lm_mean = ad.mul(lm_total, 1.0 / B)
        la_mean = ad.mul(la_total, 1.0 / B)
        ls_mean = ls_total / B
        loss = ad.add(ad.add(ad.mul(lm_mean, cfg.w_m), ad.mul(la_mean, cfg.w_a)), cfg.w_s * ls_mean)
        ad.backward(loss)
        opt_g.step()

        row = {
            "step": step,
            "generator_loss": loss.item(),
            "discriminator_loss": ld.item(),
            "loss_adjacency": lm_mean.item(),
            "loss_adversarial": la_mean.item(),
            "loss_smoothness": ls_mean,
        }
        hist.rows.append(row)
        if log is not None:
            log(row)
    return gm, hist


# ---------------------------------------------------------------- sampling


def sample_molecules(
    gm: GeneratorModel,
    latent: LatentModel,
    features: np.ndarray,
    count: int,
    sigma: float | None = None,
    seed: int = 0,
    mode: str = "perturb",
    ids: Sequence[str] | None = None,
) -> list[dict]:
    """Draw soft adjacencies from perturbed codes or random interpolants.

    ``perturb``: ``z = E(S(g)) + e`` with ``e ~ N(0, sigma^2 I)`` for a random
    training graph ``g``. ``interp``: ``z = z(alpha)`` for a random pair and
    ``alpha ~ U[0, 1]``.
    """
    if mode not in ("perturb", "interp"):
        raise ValueError(f"mode must be 'perturb' or 'interp', got {mode!r}")
    if count <= 0:
        return []
    sigma = gm.config.sigma if sigma is None else sigma
    rng = np.random.default_rng(seed)
    Z = encode(latent, features)
    ids = list(ids) if ids is not None else [str(i) for i in range(len(Z))]
    out = []
    for s in range(count):
        if mode == "perturb":
            i = int(rng.integers(len(Z)))
            z = Z[i] + sigma * rng.standard_normal(Z.shape[1])
            prov = {"source_graph_id": ids[i], "sigma": float(sigma)}
        else:
            i, j = (int(v) for v in rng.integers(len(Z), size=2))
            alpha = float(rng.random())
            z = interpolate(Z[i], Z[j], alpha)
            prov = {"source_pair": [ids[i], ids[j]], "alpha": alpha}
        out.append({"sample_id": s, **prov, "soft_adjacency": generate_adjacency(gm, z)})
    return out


# ------------------------------------------------------------- persistence


def save_generator(gm: GeneratorModel, path, extra: dict | None = None) -> None:
    path = Path(path)
    save_params(path.with_suffix(".bin"), gm.state_dict())
    manifest = {"kind": "generator_model", "config": asdict(gm.config), **(extra or {})}
    atomic_write(path.with_suffix(".json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_generator(path) -> GeneratorModel:
    path = Path(path)
    manifest = json.loads(path.with_suffix(".json").read_text())
    gm = GeneratorModel(GeneratorConfig(**manifest["config"]))
    gm.load_state_dict(load_params(path.with_suffix(".bin")))
    return gm
