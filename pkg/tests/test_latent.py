import numpy as np
import pytest

from grassy import autodiff as ad
from grassy.errors import DatasetTooSmall, DimensionMismatch, EmptyBatch, MissingProperty, NotVariational
from grassy.io import load_fixture
from grassy.latent import (
    LatentModel,
    LatentModelConfig,
    TrainingData,
    encode,
    kl_loss,
    load_checkpoint,
    predict_properties,
    property_matrix,
    reconstruction_loss,
    save_checkpoint,
    total_loss,
    train,
)
from grassy.scattering import LearnedScales, ScatteringConfig, featurize_dataset

NAMES = ("ring_count", "heavy_atoms")


@pytest.fixture(scope="module")
def fixture64():
    gs = load_fixture("fixture64")
    return gs, featurize_dataset(gs, ScatteringConfig())


def small_cfg(**kw):
    base = dict(input_dim=420, latent_dim=8, hidden=(32,), property_names=NAMES, max_epochs=30, patience=30)
    base.update(kw)
    return LatentModelConfig(**base)


def test_kl_closed_forms(rng):
    z = np.zeros((1, 1))
    assert kl_loss(z, z).item() == 0.0
    assert kl_loss(np.ones((1, 1)), z).item() == pytest.approx(0.5, abs=1e-15)
    for _ in range(50):
        mu, lv = rng.normal(size=(4, 3)), rng.normal(size=(4, 3)) * 2
        assert kl_loss(mu, lv).item() >= -1e-12
    with pytest.raises(NotVariational):
        kl_loss(z, None)


def test_config_validation():
    with pytest.raises(ValueError):
        LatentModelConfig(input_dim=8, latent_dim=8)
    with pytest.raises(ValueError):
        LatentModelConfig(input_dim=20, property_names=["p"] * 2)
    with pytest.raises(ValueError):
        LatentModelConfig(input_dim=64, property_names=[f"p{i}" for i in range(11)])


def test_encode_contract(rng):
    m = LatentModel(small_cfg(variational=True), seed=5)
    S = rng.normal(size=(3, 420))
    z1 = encode(m, S)
    assert z1.shape == (3, 8)
    np.testing.assert_array_equal(z1, encode(m, S))
    np.testing.assert_array_equal(z1, encode(LatentModel(small_cfg(variational=True), seed=5), S))
    with pytest.raises(DimensionMismatch):
        encode(m, np.zeros((1, 10)))


def test_regression_weight_zero_drops_term(rng):
    S = rng.normal(size=(6, 420))
    P = rng.normal(size=(6, 2))
    with_names = LatentModel(small_cfg(regression_weight=0.0), seed=1)
    plain = LatentModel(small_cfg(property_names=()), seed=1)
    # identical encoder/decoder initialisation: the regressor is drawn last
    la, ta = total_loss(with_names, S, P)
    lb, tb = total_loss(plain, S, None)
    assert la.value.tobytes() == lb.value.tobytes()
    assert "prop" not in ta and "prop" not in tb


def test_empty_batch():
    m = LatentModel(small_cfg(), seed=0)
    with pytest.raises(EmptyBatch):
        reconstruction_loss(m, np.zeros((0, 420)))


def test_total_loss_gradient(rng):
    cfg = LatentModelConfig(input_dim=6, latent_dim=2, hidden=(4,), property_names=("a",), variational=True, regressor_hidden=3)
    m = LatentModel(cfg, seed=2)
    S, P, eps = rng.normal(size=(5, 6)), rng.normal(size=(5, 1)), rng.normal(size=(5, 2))
    m.encoder.activation = m.decoder.activation = m.regressor.activation = "tanh"
    assert ad.gradient_check(lambda: total_loss(m, S, P, eps)[0], m.parameters()) < 1e-4


def test_missing_property(fixture64):
    gs, _ = fixture64
    with pytest.raises(MissingProperty) as exc:
        property_matrix(gs, ["logP"])
    assert exc.value.name == "logP"


def test_training_reduces_loss_and_is_deterministic(fixture64):
    gs, X = fixture64
    data = TrainingData(X, property_matrix(gs, NAMES), gs)
    cfg = LatentModelConfig(input_dim=420, property_names=NAMES, max_epochs=200, patience=200)
    m1 = LatentModel(cfg, seed=0)
    h1 = train(m1, data, seed=0)
    assert h1.rows[-1]["train_loss"] < 0.1 * h1.rows[0]["train_loss"]
    best = h1.column("best_val_loss")
    assert all(b <= a for a, b in zip(best, best[1:]))
    m2 = LatentModel(cfg, seed=0)
    h2 = train(m2, data, seed=0)
    assert h1.rows == h2.rows
    # returned model carries the best-validation parameters
    assert m1.val_loss == min(h1.column("val_loss"))


def test_dataset_too_small(fixture64):
    gs, X = fixture64
    with pytest.raises(DatasetTooSmall):
        train(LatentModel(small_cfg(), seed=0), TrainingData(X[:5], property_matrix(gs[:5], NAMES)), seed=0)


def test_overfit_ring_count(fixture64):
    gs, X = fixture64
    idx = list(range(10))
    data = TrainingData(X[idx], property_matrix([gs[i] for i in idx], NAMES))
    m = LatentModel(small_cfg(max_epochs=400, patience=400, batch_size=10), seed=0)
    train(m, data, seed=0)
    pred = predict_properties(m, X[idx], ["ring_count"])
    target = property_matrix([gs[i] for i in idx], ["ring_count"])
    # the training rows (80% of 10) are fitted closely
    assert np.median(np.abs(pred - target)) < 0.5
    with pytest.raises(MissingProperty):
        predict_properties(m, X[:1], ["logP"])


def test_constant_property_learnable(fixture64):
    gs, X = fixture64
    P = np.full((len(gs), 1), 3.0)
    m = LatentModel(small_cfg(property_names=("c",), max_epochs=200, patience=200), seed=0)
    hist = train(m, TrainingData(X, P), seed=0)
    prop = hist.column("prop")
    # Adam keeps jittering the shared encoder, so the term hovers near zero rather than at it
    assert min(prop) < 0.02 * prop[0] and min(prop) < 1e-3


def test_checkpoint_roundtrip(tmp_path, fixture64):
    gs, X = fixture64
    m = LatentModel(small_cfg(max_epochs=3, variational=True), seed=0)
    train(m, TrainingData(X, property_matrix(gs, NAMES)), seed=0)
    save_checkpoint(m, tmp_path / "ck")
    back = load_checkpoint(tmp_path / "ck")
    assert encode(back, X).tobytes() == encode(m, X).tobytes()
    assert predict_properties(back, X).tobytes() == predict_properties(m, X).tobytes()


def test_learned_scales_train_jointly(fixture64):
    gs, _ = fixture64
    gs = gs[:12]
    cfg = ScatteringConfig(J=2, Q=1, T=4, mode="learned")
    scales = LearnedScales(2, 4)
    X = featurize_dataset(gs, cfg, scales=scales)
    start = scales.logits.value.copy()
    m = LatentModel(LatentModelConfig(input_dim=X.shape[1], latent_dim=4, hidden=(16,), max_epochs=3, patience=3), seed=0)
    train(m, TrainingData(X, None, gs), seed=0, scattering=cfg, scales=scales)
    assert not np.array_equal(start, m.scales.logits.value)
    F = m.scales.selector()
    assert F.shape == (3, 5)
    np.testing.assert_allclose(F.sum(axis=1), 1.0)
