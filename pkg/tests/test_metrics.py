import json

import numpy as np
import pytest

from grassy.errors import EmptyTestSet, TooFewPoints, ZeroPropertyVector
from grassy.io import load_fixture, read_matrix_csv
from grassy.latent import LatentModel, LatentModelConfig, encode, property_matrix
from grassy.metrics import (
    MetricsReport,
    SmoothnessConfig,
    absolute_error_stats,
    export_latent,
    format_error,
    latent_knn_laplacian,
    smoothness,
    validate_report,
)
from grassy.scattering import ScatteringConfig, featurize_dataset


def test_error_stats():
    y = np.array([[1.0, 2.0], [3.0, 4.0]])
    mu, sd = absolute_error_stats(y, y)
    np.testing.assert_array_equal(mu, 0.0)
    np.testing.assert_array_equal(sd, 0.0)
    with pytest.raises(EmptyTestSet):
        absolute_error_stats(np.zeros((0, 2)), np.zeros((0, 2)))
    assert format_error(0.16774, 0.13) == "0.1677 ± 0.1300"


def test_mean_baseline_is_mean_absolute_deviation():
    gs = load_fixture("fixture64")
    rings = property_matrix(gs, ["ring_count"])
    mu, _ = absolute_error_stats(rings, np.full_like(rings, rings.mean()))
    assert mu[0] == pytest.approx(np.mean(np.abs(rings - rings.mean())), abs=1e-15)


def test_laplacian_properties(rng):
    for _ in range(10):
        Z = rng.normal(size=(50, 4))
        L = latent_knn_laplacian(Z)
        np.testing.assert_array_equal(L, L.T)
        np.testing.assert_allclose(L @ np.ones(50), 0.0, atol=1e-12)
        assert np.linalg.eigvalsh(L).min() > -1e-10


def test_laplacian_two_clusters(rng):
    Z = np.vstack([rng.normal(size=(10, 2)), rng.normal(size=(10, 2)) + 100.0])
    L = latent_knn_laplacian(Z, SmoothnessConfig(k=3))
    assert np.all(L[:10, 10:] == 0.0) and np.all(L[10:, :10] == 0.0)


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        latent_knn_laplacian(np.zeros((5, 2)), SmoothnessConfig(k=5))
    with pytest.raises(ValueError):
        SmoothnessConfig(k=0)


def test_smoothness_properties(rng):
    Z = rng.normal(size=(50, 3))
    L = latent_knn_laplacian(Z)
    assert smoothness(Z, np.full(50, 2.5)) == 0.0
    p = rng.normal(size=50)
    s = smoothness(Z, p)
    for c in (3.0, -0.01, 1e6):
        assert smoothness(Z, c * p) == pytest.approx(s, rel=1e-12, abs=1e-12)
    assert 0.0 <= s <= np.linalg.eigvalsh(L).max() + 1e-12
    with pytest.raises(ZeroPropertyVector):
        smoothness(Z, np.zeros(50))


def test_smooth_property_scores_lower(rng):
    Z = rng.uniform(size=(80, 2))
    smooth = Z[:, 0]
    rough = rng.permutation(smooth)
    assert smoothness(Z, smooth) < smoothness(Z, rough)


def test_export_latent(tmp_path):
    gs = load_fixture("fixture64")[:10]
    X = featurize_dataset(gs, ScatteringConfig())
    m = LatentModel(LatentModelConfig(420, latent_dim=4, hidden=(8,)), seed=0)
    names = ["ring_count", "heavy_atoms"]
    ids = [g.id for g in gs]
    export_latent(m, X, ids, property_matrix(gs, names), names, tmp_path / "z.csv")
    header, rids, M = read_matrix_csv(tmp_path / "z.csv")
    assert len(header) + 1 == 1 + 4 + 2 and rids == ids
    assert M[:, :4].tobytes() == encode(m, X).tobytes()
    export_latent(m, np.zeros((0, 420)), [], np.zeros((0, 2)), names, tmp_path / "empty.csv")
    assert (tmp_path / "empty.csv").read_text() == "id,z0,z1,z2,z3,ring_count,heavy_atoms\n"


def test_report_json_and_tables():
    r = MetricsReport(
        property_error={"AE+REGR": {"ring_count": (0.5, 0.25)}, "AE (probe)": {"ring_count": (0.75, 0.5)}},
        smoothness={"AE+REGR": {"ring_count": 0.12}},
        validity={"AE+REGR": {"fraction": 0.9, "total": 10, "valid": 9, "TooSmall": 1}},
        counts={"graphs": 64},
    )
    doc = json.loads(r.to_json())
    validate_report(doc)
    assert doc["property_error"]["AE+REGR"]["ring_count"] == {"mean": 0.5, "std": 0.25}
    text = r.tables()
    assert "0.5000 ± 0.2500" in text and "Smoothness" in text and "Validity" in text
    r.smoothness["AE+REGR"]["ring_count"] = float("nan")
    with pytest.raises(ValueError):
        r.to_json()


def test_schema_rejects_bad_report():
    import jsonschema

    with pytest.raises(jsonschema.ValidationError):
        validate_report({"property_error": {}, "smoothness": {}, "validity": {"x": {"fraction": 2.0, "total": 1, "valid": 1}}, "counts": {}})
