import numpy as np
import pytest

from grassy.errors import BlobFormatError, ShapeMismatch
from grassy.nn import MLP, Adam, OptimizerState, adam_step, dumps_params, load_params, loads_params, save_params


def test_zero_gradient_leaves_params():
    p = [np.array([1.0, -2.0]), np.ones((2, 2))]
    out = adam_step(p, [np.zeros(2), np.zeros((2, 2))], OptimizerState(lr=0.1))
    for a, b in zip(p, out):
        np.testing.assert_array_equal(a, b)


def test_first_step_bounded_by_lr():
    st = OptimizerState(lr=0.01)
    g = np.array([3.0, -0.2, 1e-3])
    new = adam_step([np.zeros(3)], [g], st)[0]
    assert np.all(np.abs(new) <= 0.01 * (1 + 1e-6))
    np.testing.assert_allclose(new, -0.01 * np.sign(g), rtol=1e-3)


def test_adam_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        adam_step([np.zeros(3)], [np.zeros(2)], OptimizerState())


def _run(seed):
    rng = np.random.default_rng(seed)
    net = MLP([3, 4, 1], rng)
    opt = Adam(net.parameters(), lr=0.05)
    X, y = rng.normal(size=(8, 3)), rng.normal(size=(8, 1))
    from grassy import autodiff as ad

    for _ in range(20):
        opt.zero_grad()
        d = ad.sub(net(X), y)
        ad.backward(ad.mean(ad.mul(d, d)))
        opt.step()
    return [p.value for p in net.parameters()]


def test_adam_deterministic():
    for a, b in zip(_run(3), _run(3)):
        assert a.tobytes() == b.tobytes()


def test_adam_minimises_quadratic():
    x = np.array([5.0, -3.0])
    st = OptimizerState(lr=0.1)
    for _ in range(500):
        x = adam_step([x], [2 * x], st)[0]
    assert np.linalg.norm(x) < 1e-2


def test_blob_roundtrip(tmp_path, rng):
    tensors = {"a.W": rng.normal(size=(3, 4)), "b": np.array([1.5, -0.0, np.pi]), "scalar": np.array(2.0)}
    blob = dumps_params(tensors)
    assert blob[:4] == b"GRSY"
    back = loads_params(blob)
    assert list(back) == list(tensors)
    for k in tensors:
        assert back[k].tobytes() == tensors[k].tobytes() and back[k].shape == tensors[k].shape
    save_params(tmp_path / "p.bin", tensors)
    assert (tmp_path / "p.bin").read_bytes() == blob
    assert load_params(tmp_path / "p.bin")["b"].tolist() == tensors["b"].tolist()


def test_blob_corruption(rng):
    blob = dumps_params({"x": rng.normal(size=5)})
    with pytest.raises(BlobFormatError):
        loads_params(b"XXXX" + blob[4:])
    with pytest.raises(BlobFormatError):
        loads_params(blob[:-3])
    with pytest.raises(BlobFormatError):
        loads_params(blob + b"\0")


def test_atomic_write_leaves_no_temp(tmp_path):
    save_params(tmp_path / "w.bin", {"x": np.zeros(2)})
    assert [p.name for p in tmp_path.iterdir()] == ["w.bin"]
