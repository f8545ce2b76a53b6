"""Dense layers, Adam, and the flat binary parameter format."""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import BlobFormatError, ShapeMismatch

ACTIVATIONS = {"relu": ad.relu, "tanh": ad.tanh, "sigmoid": ad.sigmoid, None: lambda x: x}


class Dense:
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, name: str = "dense"):
        limit = np.sqrt(6.0 / (n_in + n_out))
        self.W = Tensor(rng.uniform(-limit, limit, size=(n_in, n_out)), True, f"{name}.W")
        self.b = Tensor(np.zeros((1, n_out)), True, f"{name}.b")

    def __call__(self, x: Tensor) -> Tensor:
        return ad.add(ad.matmul(x, self.W), self.b)

    def parameters(self) -> list[Tensor]:
        return [self.W, self.b]


class MLP:
    """Stack of dense layers; ``activation`` between layers, ``final`` after the last."""

    def __init__(
        self,
        sizes: Sequence[int],
        rng: np.random.Generator,
        activation: str = "relu",
        final: str | None = None,
        name: str = "mlp",
    ):
        if len(sizes) < 2:
            raise ValueError("an MLP needs at least input and output sizes")
        self.sizes = list(sizes)
        self.layers = [
            Dense(a, b, rng, f"{name}.{i}") for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]))
        ]
        self.activation = activation
        self.final = final

    def __call__(self, x) -> Tensor:
        x = ad.as_tensor(x)
        if x.value.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise ShapeMismatch(f"MLP expects (batch, {self.sizes[0]}), got {x.shape}")
        for i, layer in enumerate(self.layers):
            x = layer(x)
            act = self.activation if i < len(self.layers) - 1 else self.final
            x = ACTIVATIONS[act](x)
        return x

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


@dataclass
class OptimizerState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(
    params: Sequence[np.ndarray], grads: Sequence[np.ndarray | None], state: OptimizerState
) -> list[np.ndarray]:
    """One bias-corrected Adam update; returns new arrays and advances ``state``."""
    if len(params) != len(grads):
        raise ShapeMismatch(f"{len(params)} parameters but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            g = np.zeros_like(p)
        if g.shape != p.shape or state.m[i].shape != p.shape:
            raise ShapeMismatch(f"adam: parameter {p.shape} vs gradient {g.shape}")
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        mhat = state.m[i] / c1
        vhat = state.v[i] / c2
        out.append(p - state.lr * mhat / (np.sqrt(vhat) + state.eps))
    return out


class Adam:
    """Adam over a fixed list of parameter tensors, updated in place."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3, **kw):
        self.params = list(params)
        self.state = OptimizerState(lr=lr, **kw)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        new = adam_step([p.value for p in self.params], [p.grad for p in self.params], self.state)
        for p, v in zip(self.params, new):
            p.value = v


# ------------------------------------------------------------------- blob IO

MAGIC = b"GRSY"
VERSION = 1


def dumps_params(tensors: Mapping[str, np.ndarray]) -> bytes:
    """Little-endian layout: magic, u32 version, u32 count, then per tensor
    u32 name length, UTF-8 name, u32 rank, u64 dims, f64 values (row-major)."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f8")  # tobytes() is row-major; ascontiguousarray would promote 0-d
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def loads_params(data: bytes) -> dict[str, np.ndarray]:
    if data[:4] != MAGIC:
        raise BlobFormatError("bad magic, not a GRSY parameter blob")
    pos = 4

    def take(fmt: str):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise BlobFormatError("truncated parameter blob")
        vals = struct.unpack_from(fmt, data, pos)
        pos += size
        return vals

    version, count = take("<II")
    if version != VERSION:
        raise BlobFormatError(f"unsupported blob version {version}")
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = take("<I")
        if pos + nlen > len(data):
            raise BlobFormatError("truncated parameter blob")
        name = data[pos : pos + nlen].decode("utf-8")
        pos += nlen
        (rank,) = take("<I")
        dims = take(f"<{rank}Q")
        n = int(np.prod(dims)) if rank else 1
        if pos + 8 * n > len(data):
            raise BlobFormatError("truncated parameter blob")
        out[name] = np.frombuffer(data, dtype="<f8", count=n, offset=pos).reshape(dims).astype(np.float64)
        pos += 8 * n
    if pos != len(data):
        raise BlobFormatError("trailing bytes after parameter blob")
    return out


def atomic_write(path: str | os.PathLike, data: bytes | str) -> None:
    """Write to a sibling temp file then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_params(path, tensors: Mapping[str, np.ndarray]) -> None:
    atomic_write(path, dumps_params(tensors))


def load_params(path) -> dict[str, np.ndarray]:
    return loads_params(Path(path).read_bytes())
