"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

Every op returns a new :class:`Tensor` holding its parents and a closure that
maps the output gradient to input gradients. Nodes receive a monotonically
increasing id when recorded, so sorting reachable nodes by id gives a valid
topological order and ``backward`` replays them in reverse.

Broadcasting is deliberately limited to adding a ``(1, k)`` or ``(k,)`` bias
to every row of an ``(m, k)`` tensor, and to Python scalar constants.
"""

from __future__ import annotations

import contextlib
import itertools
import threading
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NonScalarLoss, ShapeMismatch

_ids = itertools.count()
_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """Forward-only evaluation: nothing is recorded, results are constants."""
    prev = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "name", "_parents", "_backward", "_id")

    def __init__(self, value, requires_grad: bool = False, name: str | None = None):
        self.value = np.array(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None
        self._id = next(_ids)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return self.value.size

    def item(self) -> float:
        if self.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.value.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.value

    def detach(self) -> "Tensor":
        return Tensor(self.value)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return slice_(self, index)

    @property
    def T(self):
        return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(value: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(value)
    if grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _shape_error(op: str, a, b) -> ShapeMismatch:
    return ShapeMismatch(f"{op}: incompatible shapes {tuple(a)} and {tuple(b)}")


def _is_row_bias(a: np.ndarray, b: np.ndarray) -> bool:
    if a.ndim != 2:
        return False
    return (b.ndim == 1 and b.shape[0] == a.shape[1]) or (b.ndim == 2 and b.shape == (1, a.shape[1]))


# ---------------------------------------------------------------- binary ops


def add(a, b) -> Tensor:
    a = as_tensor(a)
    if not isinstance(b, Tensor) and np.ndim(b) == 0:
        return _record(a.value + float(b), (a,), lambda g: (g,))
    b = as_tensor(b)
    if a.shape == b.shape:
        return _record(a.value + b.value, (a, b), lambda g: (g, g))
    if _is_row_bias(a.value, b.value):
        bshape = b.shape
        return _record(a.value + b.value, (a, b), lambda g: (g, g.sum(axis=0).reshape(bshape)))
    raise _shape_error("add", a.shape, b.shape)


def sub(a, b) -> Tensor:
    if not isinstance(b, Tensor) and np.ndim(b) == 0:
        return add(a, -float(b))
    return add(a, mul(as_tensor(b), -1.0))


def mul(a, b) -> Tensor:
    """Elementwise product of equal-shape tensors, or scaling by a Python scalar."""
    a = as_tensor(a)
    if not isinstance(b, Tensor) and np.ndim(b) == 0:
        c = float(b)
        return _record(a.value * c, (a,), lambda g: (g * c,))
    b = as_tensor(b)
    if a.shape != b.shape:
        raise _shape_error("mul", a.shape, b.shape)
    av, bv = a.value, b.value
    return _record(av * bv, (a, b), lambda g: (g * bv, g * av))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise _shape_error("matmul", a.shape, b.shape)
    av, bv = a.value, b.value
    return _record(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


# ----------------------------------------------------------------- unary ops


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.value > 0
    return _record(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    x = a.value
    s = np.empty_like(x)
    pos = x >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    s[~pos] = ex / (1.0 + ex)
    return _record(s, (a,), lambda g: (g * s * (1.0 - s),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    t = np.tanh(a.value)
    return _record(t, (a,), lambda g: (g * (1.0 - t * t),))


def exp(a) -> Tensor:
    a = as_tensor(a)
    e = np.exp(a.value)
    return _record(e, (a,), lambda g: (g * e,))


def log(a) -> Tensor:
    a = as_tensor(a)
    x = a.value
    return _record(np.log(x), (a,), lambda g: (g / x,))


def power(a, p: float) -> Tensor:
    """Elementwise ``a**p``; intended for strictly positive inputs."""
    a = as_tensor(a)
    x = a.value
    return _record(x**p, (a,), lambda g: (g * p * x ** (p - 1.0),))


def abs_pow(a, q: float) -> Tensor:
    """Elementwise ``|a|**q`` for ``q >= 1``; the subgradient at zero is 0."""
    a = as_tensor(a)
    x = a.value
    ax = np.abs(x)
    out = ax if q == 1 else ax**q
    if q == 1:
        return _record(out, (a,), lambda g: (g * np.sign(x),))
    return _record(out, (a,), lambda g: (g * q * ax ** (q - 1.0) * np.sign(x),))


def clip(a, lo: float, hi: float) -> Tensor:
    a = as_tensor(a)
    x = a.value
    inside = (x >= lo) & (x <= hi)
    return _record(np.clip(x, lo, hi), (a,), lambda g: (g * inside,))


def softmax_rows(a) -> Tensor:
    a = as_tensor(a)
    if a.value.ndim != 2:
        raise ShapeMismatch(f"softmax_rows expects a matrix, got shape {a.shape}")
    z = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)
    return _record(s, (a,), lambda g: (s * (g - (g * s).sum(axis=1, keepdims=True)),))


# ---------------------------------------------------------------- reductions


def sum_(a, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    if axis is None:
        return _record(np.array(a.value.sum()), (a,), lambda g: (np.full(shape, float(g)),))
    out = a.value.sum(axis=axis, keepdims=True)
    return _record(out, (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def mean(a, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[axis]
    return mul(sum_(a, axis), 1.0 / count)


def frobenius_norm(a) -> Tensor:
    """Frobenius norm; the gradient at the zero matrix is taken to be zero."""
    a = as_tensor(a)
    x = a.value
    nrm = float(np.sqrt(np.sum(x * x)))

    def back(g):
        if nrm == 0.0:
            return (np.zeros_like(x),)
        return (g * x / nrm,)

    return _record(np.array(nrm), (a,), back)


# ------------------------------------------------------------- structural ops


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.value for t in ts], axis=axis)
    except ValueError:
        raise ShapeMismatch(
            f"concat along axis {axis}: incompatible shapes {[t.shape for t in ts]}"
        ) from None
    bounds = np.cumsum([0] + [t.shape[axis] for t in ts])

    def back(g):
        return [np.take(g, range(bounds[i], bounds[i + 1]), axis=axis) for i in range(len(ts))]

    return _record(out, ts, back)


def slice_(a, index) -> Tensor:
    a = as_tensor(a)
    shape = a.shape

    def back(g):
        full = np.zeros(shape)
        np.add.at(full, index, g)
        return (full,)

    return _record(np.array(a.value[index]), (a,), back)


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    try:
        out = a.value.reshape(shape)
    except ValueError:
        raise _shape_error("reshape", old, shape) from None
    return _record(out, (a,), lambda g: (g.reshape(old),))


def transpose(a) -> Tensor:
    a = as_tensor(a)
    return _record(a.value.T.copy(), (a,), lambda g: (g.T,))


# ------------------------------------------------------------------ backward


def backward(loss: Tensor) -> None:
    """Accumulate ``d loss / d t`` into ``t.grad`` for every reachable leaf ``t``.

    Gradients add up across repeated uses and across calls; clear them with
    ``zero_grad`` between steps.
    """
    if loss.size != 1:
        raise NonScalarLoss(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    nodes: dict[int, Tensor] = {}
    stack = [loss]
    while stack:
        t = stack.pop()
        if t._id in nodes:
            continue
        nodes[t._id] = t
        stack.extend(p for p in t._parents if p.requires_grad)

    grads: dict[int, np.ndarray] = {loss._id: np.ones(loss.shape)}
    for nid in sorted(nodes, reverse=True):
        t = nodes[nid]
        g = grads.pop(nid, None)
        if g is None:
            continue
        if t._backward is None:
            t.grad = g.copy() if t.grad is None else t.grad + g
            continue
        for p, pg in zip(t._parents, t._backward(g)):
            if pg is None or not p.requires_grad:
                continue
            pg = np.asarray(pg, dtype=np.float64).reshape(p.shape)
            grads[p._id] = grads[p._id] + pg if p._id in grads else pg


def gradient_check(
    f: Callable[[], Tensor], params: Iterable[Tensor], h: float = 1e-5, floor: float = 1e-6
) -> float:
    """Worst-coordinate relative error between ``backward`` and central differences.

    ``f`` rebuilds the scalar loss from the current parameter values on each
    call. The relative error of a coordinate is ``|a - n| / max(|a|, |n|, floor)``.
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    backward(f())
    worst = 0.0
    for p in params:
        analytic = np.zeros(p.shape) if p.grad is None else p.grad.copy()
        flat = p.value.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f().item()
            flat[i] = orig - h
            fm = f().item()
            flat[i] = orig
            numeric = (fp - fm) / (2 * h)
            a = analytic.reshape(-1)[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, err)
        p.zero_grad()
    return worst
