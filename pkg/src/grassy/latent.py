"""Regularised (variational) autoencoder over scattering moments.

The encoder ``E`` maps standardised moments to a latent code, the decoder
``F`` reconstructs the moments and the regressor ``R`` predicts standardised
molecular properties from the code. Training minimises

    recon + regression_weight * prop (+ kl_weight * KL for the VAE)

where ``recon`` and ``prop`` are element-wise mean squared errors.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import (
    DatasetTooSmall,
    DimensionMismatch,
    EmptyBatch,
    MissingProperty,
    NotVariational,
)
from .graph import MolecularGraph
from .nn import MLP, Adam, atomic_write, load_params, save_params
from .scattering import DiffusionCache, LearnedScales, ScatteringConfig, scattering_tensor


@dataclass
class LatentModelConfig:
    input_dim: int
    latent_dim: int = 32
    hidden: tuple[int, ...] = (256, 128)
    variational: bool = False
    regression_weight: float = 1.0
    kl_weight: float = 1e-3
    property_names: tuple[str, ...] = ()
    regressor_hidden: int = 64
    lr: float = 3e-3
    max_epochs: int = 200
    patience: int = 20
    batch_size: int = 32

    def __post_init__(self):
        self.hidden = tuple(self.hidden)
        self.property_names = tuple(self.property_names)
        if self.latent_dim >= self.input_dim:
            raise ValueError(f"latent_dim ({self.latent_dim}) must be < input_dim ({self.input_dim})")
        if self.regression_weight < 0:
            raise ValueError("regression_weight must be >= 0")
        if self.kl_weight < 0:
            raise ValueError("kl_weight must be >= 0")
        if len(self.property_names) > 10:
            raise ValueError("at most 10 properties are supported")
        if len(set(self.property_names)) != len(self.property_names):
            raise ValueError("duplicate property names")

    @property
    def uses_regression(self) -> bool:
        return self.regression_weight > 0 and bool(self.property_names)


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std > 1e-12, std, 1.0)
        return cls(mean, std)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std

    def inverse(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) * self.std + self.mean


class LatentModel:
    def __init__(self, config: LatentModelConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        c = config
        enc_out = 2 * c.latent_dim if c.variational else c.latent_dim
        self.encoder = MLP([c.input_dim, *c.hidden, enc_out], rng, name="encoder")
        self.decoder = MLP([c.latent_dim, *reversed(c.hidden), c.input_dim], rng, name="decoder")
        self.regressor = (
            MLP([c.latent_dim, c.regressor_hidden, len(c.property_names)], rng, name="regressor")
            if c.property_names
            else None
        )
        self.feature_stats = Standardizer(np.zeros(c.input_dim), np.ones(c.input_dim))
        self.property_stats = Standardizer(np.zeros(len(c.property_names)), np.ones(len(c.property_names)))
        self.scales: LearnedScales | None = None
        self.epoch = 0
        self.val_loss = float("nan")

    def parameters(self) -> list[Tensor]:
        ps = self.encoder.parameters() + self.decoder.parameters()
        if self.regressor is not None:
            ps += self.regressor.parameters()
        if self.scales is not None:
            ps += self.scales.parameters()
        return ps

    # ---- forward pieces on standardised inputs

    def encode_tensor(self, S) -> tuple[Tensor, Tensor | None]:
        """Return ``(mu, logvar)``; ``logvar`` is None for the plain AE."""
        h = self.encoder(S)
        if not self.config.variational:
            return h, None
        k = self.config.latent_dim
        return ad.slice_(h, (slice(None), slice(0, k))), ad.slice_(h, (slice(None), slice(k, 2 * k)))

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.value.copy() for p in self.parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for p in self.parameters():
            if p.name not in state:
                raise KeyError(f"checkpoint has no tensor {p.name!r}")
            if state[p.name].shape != p.shape:
                raise DimensionMismatch(f"{p.name}: checkpoint shape {state[p.name].shape} vs {p.shape}")
            p.value = np.array(state[p.name], dtype=np.float64)


def _check_features(m: LatentModel, S) -> np.ndarray:
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if S.shape[1] != m.config.input_dim:
        raise DimensionMismatch(f"expected {m.config.input_dim} features, got {S.shape[1]}")
    return S


def encode(m: LatentModel, S) -> np.ndarray:
    """Latent codes for raw moments ``S`` (one row per graph); the VAE returns ``mu``."""
    S = _check_features(m, S)
    with ad.no_grad():
        mu, _ = m.encode_tensor(m.feature_stats.transform(S))
    return mu.value


def decode(m: LatentModel, Z) -> np.ndarray:
    """Decoded moments in standardised units."""
    with ad.no_grad():
        return m.decoder(np.atleast_2d(Z)).value


def predict_properties(m: LatentModel, S, names: Sequence[str] | None = None) -> np.ndarray:
    if m.regressor is None:
        raise MissingProperty("<any>", "<model has no regressor>")
    S = _check_features(m, S)
    cols = list(range(len(m.config.property_names)))
    if names is not None:
        cols = []
        for name in names:
            if name not in m.config.property_names:
                raise MissingProperty(name, "<model>")
            cols.append(m.config.property_names.index(name))
    with ad.no_grad():
        z = encode(m, S)
        pred = m.property_stats.inverse(m.regressor(z).value)
    return pred[:, cols]


# ------------------------------------------------------------------ losses


def reconstruction_loss(m: LatentModel, S_std, z: Tensor | None = None) -> Tensor:
    S_std = ad.as_tensor(S_std)
    if S_std.shape[0] == 0:
        raise EmptyBatch("reconstruction loss on an empty batch")
    if z is None:
        z, _ = m.encode_tensor(S_std)
    diff = ad.sub(S_std, m.decoder(z))
    return ad.mean(ad.mul(diff, diff))


def property_loss(m: LatentModel, z: Tensor, P_std) -> Tensor:
    P_std = ad.as_tensor(P_std)
    if P_std.shape[0] == 0:
        raise EmptyBatch("property loss on an empty batch")
    diff = ad.sub(P_std, m.regressor(z))
    return ad.mean(ad.mul(diff, diff))


def kl_loss(mu, logvar) -> Tensor:
    """KL divergence to the unit normal, summed over latent dims, averaged over rows."""
    if logvar is None:
        raise NotVariational("KL term requires a variational model")
    mu, logvar = ad.as_tensor(mu), ad.as_tensor(logvar)
    terms = ad.sub(ad.sub(ad.add(logvar, 1.0), ad.mul(mu, mu)), ad.exp(logvar))
    return ad.mul(ad.sum_(terms), -0.5 / mu.shape[0])


def property_matrix(graphs: Sequence[MolecularGraph], names: Sequence[str]) -> np.ndarray:
    out = np.zeros((len(graphs), len(names)))
    for i, g in enumerate(graphs):
        for k, name in enumerate(names):
            if name not in g.properties:
                raise MissingProperty(name, g.id if g.id is not None else i)
            out[i, k] = float(g.properties[name])
    return out


def total_loss(
    m: LatentModel,
    S_std,
    P_std=None,
    eps: np.ndarray | None = None,
) -> tuple[Tensor, dict[str, float]]:
    """Training objective for one batch. ``eps`` (detached noise) switches the VAE to sampling."""
    c = m.config
    mu, logvar = m.encode_tensor(S_std)
    z = mu
    if c.variational and eps is not None:
        z = ad.add(mu, ad.mul(ad.exp(ad.mul(logvar, 0.5)), Tensor(eps)))
    loss = reconstruction_loss(m, S_std, z)
    terms = {"recon": loss.item()}
    if c.uses_regression:
        lp = property_loss(m, z, P_std)
        terms["prop"] = lp.item()
        loss = ad.add(loss, ad.mul(lp, c.regression_weight))
    if c.variational:
        kl = kl_loss(mu, logvar)
        terms["kl"] = kl.item()
        loss = ad.add(loss, ad.mul(kl, c.kl_weight))
    return loss, terms


# ----------------------------------------------------------------- training


def split_indices(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shuffled 80/10/10 train/validation/test split."""
    perm = rng.permutation(n)
    n_val = max(1, int(round(0.1 * n)))
    n_test = max(1, int(round(0.1 * n)))
    n_train = n - n_val - n_test
    return perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :]


def batches(idx: np.ndarray, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = idx[rng.permutation(len(idx))]
    return [order[i : i + batch_size] for i in range(0, len(order), batch_size)]


@dataclass
class TrainingData:
    """Raw moments (or graphs for learned scales) plus property targets."""

    features: np.ndarray
    properties: np.ndarray | None = None
    graphs: Sequence[MolecularGraph] | None = None
    ids: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass
class History:
    rows: list[dict[str, float]] = field(default_factory=list)
    best_epoch: int = 0
    split: dict[str, list[int]] = field(default_factory=dict)

    def column(self, name: str) -> list[float]:
        return [r[name] for r in self.rows]


def _eval_loss(m: LatentModel, S_std, P_std: np.ndarray | None) -> float:
    with ad.no_grad():
        loss, _ = total_loss(m, S_std, P_std)
    return loss.item()


def train(
    m: LatentModel,
    data: TrainingData,
    seed: int = 0,
    scattering: ScatteringConfig | None = None,
    scales: LearnedScales | None = None,
    log=None,
) -> History:
    """Fit ``m`` with Adam and early stopping on validation loss.

    Restores the best-validation parameters before returning. With ``scales``
    the moments are recomputed on the tape each batch so the selector logits
    train jointly; the feature standardisation is frozen at the initial moments.
    """
    c = m.config
    N = len(data)
    if N < 10:
        raise DatasetTooSmall(f"need at least 10 graphs, got {N}")
    rng = np.random.default_rng(seed)
    tr, va, te = split_indices(N, rng)

    m.feature_stats = Standardizer.fit(data.features[tr])
    S_std = m.feature_stats.transform(data.features)
    P_std = None
    if c.property_names:
        if data.properties is None:
            raise MissingProperty(c.property_names[0], "<dataset>")
        m.property_stats = Standardizer.fit(data.properties[tr])
        P_std = m.property_stats.transform(data.properties)

    caches = None
    if scales is not None:
        if data.graphs is None or scattering is None:
            raise ValueError("learned scales need the graphs and the scattering config")
        m.scales = scales
        caches = [DiffusionCache(g, scattering) for g in data.graphs]
        mean, std = m.feature_stats.mean, m.feature_stats.std

    def feats(idx):
        if caches is None:
            return S_std[idx]
        rows = ad.concat([scattering_tensor(caches[i], scales) for i in idx], axis=0)
        return ad.mul(ad.sub(rows, Tensor(np.tile(mean, (len(idx), 1)))), Tensor(np.tile(1.0 / std, (len(idx), 1))))

    opt = Adam(m.parameters(), lr=c.lr)
    best = float("inf")
    best_state = m.state_dict()
    hist = History(split={"train": tr.tolist(), "val": va.tolist(), "test": te.tolist()})
    stale = 0
    for epoch in range(1, c.max_epochs + 1):
        sums: dict[str, float] = {}
        total = 0.0
        for b in batches(tr, c.batch_size, rng):
            eps = rng.standard_normal((len(b), c.latent_dim)) if c.variational else None
            opt.zero_grad()
            loss, terms = total_loss(m, feats(b), None if P_std is None else P_std[b], eps)
            ad.backward(loss)
            opt.step()
            total += loss.item() * len(b)
            for k, v in terms.items():
                sums[k] = sums.get(k, 0.0) + v * len(b)
        with ad.no_grad():
            val = _eval_loss(m, feats(va), None if P_std is None else P_std[va])
        row = {"epoch": epoch, "train_loss": total / len(tr), "val_loss": val}
        row.update({k: v / len(tr) for k, v in sums.items()})
        if val < best:
            best, stale = val, 0
            best_state = m.state_dict()
            hist.best_epoch = epoch
        else:
            stale += 1
        row["best_val_loss"] = best
        hist.rows.append(row)
        if log is not None:
            log(row)
        if stale >= c.patience:
            break
    m.load_state_dict(best_state)
    m.epoch = hist.best_epoch
    m.val_loss = best
    return hist


def train_probe(
    m: LatentModel,
    data: TrainingData,
    names: Sequence[str],
    split: dict[str, list[int]],
    seed: int = 0,
    hidden: int | None = None,
    lr: float | None = None,
    max_epochs: int | None = None,
    patience: int | None = None,
) -> tuple[MLP, Standardizer]:
    """Fit a fresh regressor on the frozen latent codes of ``m`` (post-hoc probe)."""
    c = m.config
    rng = np.random.default_rng(seed)
    tr, va = np.array(split["train"]), np.array(split["val"])
    Z = encode(m, data.features)
    stats = Standardizer.fit(data.properties[tr])
    P = stats.transform(data.properties)
    probe = MLP([c.latent_dim, hidden or c.regressor_hidden, len(names)], rng, name="probe")
    opt = Adam(probe.parameters(), lr=lr or c.lr)
    best, stale = float("inf"), 0
    best_vals = [p.value.copy() for p in probe.parameters()]
    for _ in range(max_epochs or c.max_epochs):
        for b in batches(tr, c.batch_size, rng):
            opt.zero_grad()
            diff = ad.sub(P[b], probe(Z[b]))
            ad.backward(ad.mean(ad.mul(diff, diff)))
            opt.step()
        with ad.no_grad():
            val = float(np.mean((P[va] - probe(Z[va]).value) ** 2))
        if val < best:
            best, stale = val, 0
            best_vals = [p.value.copy() for p in probe.parameters()]
        else:
            stale += 1
            if stale >= (patience or c.patience):
                break
    for p, v in zip(probe.parameters(), best_vals):
        p.value = v
    return probe, stats


def probe_predict(m: LatentModel, probe: MLP, stats: Standardizer, S) -> np.ndarray:
    with ad.no_grad():
        return stats.inverse(probe(encode(m, S)).value)


# -------------------------------------------------------------- persistence


def save_checkpoint(m: LatentModel, path) -> None:
    """Write ``<path>.bin`` (parameter blob) and ``<path>.json`` (manifest)."""
    path = Path(path)
    save_params(path.with_suffix(".bin"), m.state_dict())
    manifest = {
        "kind": "latent_model",
        "config": asdict(m.config),
        "feature_mean": m.feature_stats.mean.tolist(),
        "feature_std": m.feature_stats.std.tolist(),
        "property_names": list(m.config.property_names),
        "property_mean": m.property_stats.mean.tolist(),
        "property_std": m.property_stats.std.tolist(),
        "has_learned_scales": m.scales is not None,
        "scales_shape": list(m.scales.logits.shape) if m.scales is not None else None,
        "epoch": m.epoch,
        "val_loss": m.val_loss,
    }
    atomic_write(path.with_suffix(".json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_checkpoint(path) -> LatentModel:
    path = Path(path)
    manifest = json.loads(path.with_suffix(".json").read_text())
    cfg = LatentModelConfig(**manifest["config"])
    m = LatentModel(cfg)
    if manifest.get("has_learned_scales"):
        J1, T1 = manifest["scales_shape"]
        m.scales = LearnedScales(J1 - 1, T1 - 1, logits=np.zeros((J1, T1)))
    m.load_state_dict(load_params(path.with_suffix(".bin")))
    m.feature_stats = Standardizer(np.array(manifest["feature_mean"]), np.array(manifest["feature_std"]))
    m.property_stats = Standardizer(np.array(manifest["property_mean"]), np.array(manifest["property_std"]))
    m.epoch = manifest["epoch"]
    m.val_loss = manifest["val_loss"]
    return m
