"""Evaluation: property-prediction error, latent smoothness, latent export.

Smoothness of a property ``p`` over latent points ``Z`` is the Rayleigh
quotient ``p^T L p / p^T p`` of a Gaussian kNN-graph Laplacian built on ``Z``.
Lower means the property varies slowly between latent neighbours.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import EmptyTestSet, TooFewPoints, ZeroPropertyVector
from .io import write_matrix_csv
from .latent import LatentModel, encode, predict_properties


@dataclass(frozen=True)
class SmoothnessConfig:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


# ---------------------------------------------------------- property error


def absolute_error_stats(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise mean and (population) std of ``|y_true - y_pred|``."""
    y_true, y_pred = np.atleast_2d(y_true), np.atleast_2d(y_pred)
    if y_true.shape[0] == 0:
        raise EmptyTestSet("no test rows")
    err = np.abs(y_true - y_pred)
    return err.mean(axis=0), err.std(axis=0)


def property_error(
    m: LatentModel, features, targets, names: Sequence[str] | None = None
) -> dict[str, tuple[float, float]]:
    """``{name: (mean, std)}`` of the regressor's absolute error in original units."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise EmptyTestSet("property error needs at least one test graph")
    names = list(names if names is not None else m.config.property_names)
    pred = predict_properties(m, features, names)
    mu, sd = absolute_error_stats(np.asarray(targets, dtype=np.float64).reshape(pred.shape), pred)
    return {n: (float(a), float(b)) for n, a, b in zip(names, mu, sd)}


def format_error(mean: float, std: float, digits: int = 4) -> str:
    return f"{mean:.{digits}f} ± {std:.{digits}f}"


# -------------------------------------------------------------- smoothness


def latent_knn_laplacian(Z, cfg: SmoothnessConfig = SmoothnessConfig()) -> np.ndarray:
    """Dense ``L = D - W`` of the union kNN graph with adaptive Gaussian weights.

    The bandwidth of an edge is the average of its endpoints' squared
    distance to their k-th neighbour.
    """
    Z = np.asarray(Z, dtype=np.float64)
    n = Z.shape[0]
    if n < cfg.k + 1:
        raise TooFewPoints(f"need at least k+1={cfg.k + 1} points, got {n}")
    d2 = cdist(Z, Z, "sqeuclidean")
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")[:, : cfg.k]
    rows = np.repeat(np.arange(n), cfg.k)
    cols = order.ravel()
    eps_pt = d2[np.arange(n), order[:, -1]]

    mask = np.zeros((n, n), dtype=bool)
    mask[rows, cols] = True
    mask |= mask.T
    i, j = np.nonzero(mask)
    eps = 0.5 * (eps_pt[i] + eps_pt[j])
    # coincident neighbourhoods give eps = 0 at distance 0: weight 1
    w = np.exp(-np.divide(d2[i, j], eps, out=np.zeros_like(eps), where=eps > 0))
    W = np.zeros((n, n))
    W[i, j] = w
    W = 0.5 * (W + W.T)
    return np.diag(W.sum(axis=1)) - W


def rayleigh(L: np.ndarray, p) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    if p.shape[0] != L.shape[0]:
        raise ValueError(f"property vector has {p.shape[0]} entries, Laplacian has {L.shape[0]} rows")
    pp = float(p @ p)
    if pp == 0.0:
        raise ZeroPropertyVector("property vector is all zeros")
    if np.ptp(p) == 0.0:
        return 0.0  # L annihilates constants; skip the rounding noise
    return float(p @ L @ p) / pp


def smoothness(Z, p, cfg: SmoothnessConfig = SmoothnessConfig(), L: np.ndarray | None = None) -> float:
    if L is None:
        L = latent_knn_laplacian(Z, cfg)
    return rayleigh(L, p)


# ------------------------------------------------------------------ export


def export_latent(m: LatentModel, features, ids: Sequence[str], properties, names: Sequence[str], path) -> None:
    """CSV with columns ``id, z0..z{d-1}, <property names>``, rows in input order."""
    d = m.config.latent_dim
    features = np.asarray(features, dtype=np.float64)
    Z = encode(m, features) if len(ids) else np.zeros((0, d))
    P = np.asarray(properties, dtype=np.float64).reshape(len(ids), len(names))
    write_matrix_csv(path, [f"z{i}" for i in range(d)] + list(names), ids, np.hstack([Z, P]))


# ------------------------------------------------------------------ report


@dataclass
class MetricsReport:
    property_error: dict[str, dict[str, tuple[float, float]]] = field(default_factory=dict)
    smoothness: dict[str, dict[str, float]] = field(default_factory=dict)
    validity: dict[str, dict[str, float]] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "property_error": {
                model: {p: {"mean": mu, "std": sd} for p, (mu, sd) in row.items()}
                for model, row in self.property_error.items()
            },
            "smoothness": self.smoothness,
            "validity": self.validity,
            "counts": self.counts,
        }

    def check_finite(self) -> None:
        def walk(x, where):
            if isinstance(x, Mapping):
                for k, v in x.items():
                    walk(v, f"{where}.{k}")
            elif isinstance(x, (list, tuple)):
                for k, v in enumerate(x):
                    walk(v, f"{where}[{k}]")
            elif isinstance(x, float) and not math.isfinite(x):
                raise ValueError(f"non-finite value at {where}")

        walk(self.to_dict(), "report")

    def to_json(self) -> str:
        self.check_finite()
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def tables(self) -> str:
        parts = []
        if self.property_error:
            parts.append(_table("Property prediction error (mean ± std)", self.property_error, lambda v: format_error(*v)))
        if self.smoothness:
            parts.append(_table("Smoothness (lower is smoother)", self.smoothness, lambda v: f"{v:.4f}"))
        if self.validity:
            parts.append(_table("Validity", self.validity, lambda v: f"{v:.4f}" if isinstance(v, float) else str(v)))
        return "\n\n".join(parts) + "\n"


def _table(title: str, rows: Mapping[str, Mapping[str, object]], cell) -> str:
    cols: list[str] = []
    for r in rows.values():
        cols += [c for c in r if c not in cols]
    body = [["model", *cols]] + [[name, *(cell(r[c]) if c in r else "-" for c in cols)] for name, r in rows.items()]
    widths = [max(len(row[i]) for row in body) for i in range(len(body[0]))]
    lines = [title]
    for k, row in enumerate(body):
        lines.append("  ".join(s.ljust(w) if i == 0 else s.rjust(w) for i, (s, w) in enumerate(zip(row, widths))).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def report_schema() -> dict:
    return json.loads((resources.files("grassy") / "data" / "report.schema.json").read_text())


def validate_report(doc: dict) -> None:
    import jsonschema

    jsonschema.validate(doc, report_schema())


def write_report(report: MetricsReport, out_dir) -> tuple[Path, Path]:
    from .nn import atomic_write

    out = Path(out_dir)
    doc = json.loads(report.to_json())
    validate_report(doc)
    atomic_write(out / "report.json", report.to_json())
    atomic_write(out / "tables.txt", report.tables())
    return out / "report.json", out / "tables.txt"
