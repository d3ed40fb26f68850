"""Tape-based reverse-mode differentiation over numpy arrays.

Every op executed while a :class:`Tape` is active and at least one input requires
a gradient is appended to that tape. Recording order is a topological order, so the
reverse sweep is a single pass over the list.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    def __init__(self, op: str, *shapes):
        self.op = op
        self.shapes = shapes
        super().__init__(f"{op}: incompatible shapes {', '.join(str(s) for s in shapes)}")


class NonFiniteError(FloatingPointError):
    def __init__(self, op: str):
        self.op = op
        super().__init__(f"{op}: produced NaN or Inf")


class Tensor:
    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None, dtype=None):
        self.data = np.asarray(data, dtype=dtype)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tag}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)


class Tape:
    """Ordered record of executed ops; use as a context manager."""

    _stack: list[Tape] = []

    def __init__(self):
        self.nodes: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []

    def __enter__(self) -> Tape:
        Tape._stack.append(self)
        return self

    def __exit__(self, *exc):
        Tape._stack.pop()
        return False

    def __len__(self):
        return len(self.nodes)

    @classmethod
    def active(cls) -> Tape | None:
        return cls._stack[-1] if cls._stack else None

    def backward(self, loss: Tensor, params: Mapping[str, Tensor] | None = None):
        return backward(self, loss, params)


def backward(tape: Tape, loss: Tensor, params: Mapping[str, Tensor] | None = None):
    """Reverse sweep from a scalar ``loss``.

    Returns ``{name: grad}`` for ``params`` (zeros when unreachable), or, without
    ``params``, a dict keyed by ``id`` of every tensor that received a gradient.
    """
    if loss.data.size != 1:
        raise ShapeError("backward (loss must be scalar)", loss.shape)
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for out, inputs, vjp in reversed(tape.nodes):
        g = grads.pop(id(out), None)
        if g is None:
            continue
        for inp, gi in zip(inputs, vjp(g)):
            if gi is None or not inp.requires_grad:
                continue
            key = id(inp)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi
    # only leaves are left: intermediate gradients were popped on the way down
    if params is None:
        return grads
    return {name: grads.get(id(t), np.zeros_like(t.data)) for name, t in params.items()}


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def _record(op: str, data: np.ndarray, inputs: Sequence[Tensor], vjp: Callable) -> Tensor:
    if not np.isfinite(data).all():
        raise NonFiniteError(op)
    needs = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=needs)
    if needs:
        tape = Tape.active()
        if tape is not None:
            tape.nodes.append((out, tuple(inputs), vjp))
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------- elementwise

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError("add", a.shape, b.shape) from None
    return _record("add", out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data - b.data
    except ValueError:
        raise ShapeError("sub", a.shape, b.shape) from None
    return _record("sub", out, (a, b), lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeError("mul", a.shape, b.shape) from None
    return _record("mul", out, (a, b), lambda g: (
        _unbroadcast(g * b.data, a.shape) if a.requires_grad else None,
        _unbroadcast(g * a.data, b.shape) if b.requires_grad else None,
    ))


def scale(a: Tensor, c: float) -> Tensor:
    return _record("scale", a.data * c, (a,), lambda g: (g * c,))


def square(a: Tensor) -> Tensor:
    return _record("square", a.data * a.data, (a,), lambda g: (2.0 * a.data * g,))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _record("relu", np.where(mask, x.data, 0).astype(x.dtype, copy=False), (x,), lambda g: (g * mask,))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _record("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def sigmoid(x: Tensor) -> Tensor:
    y = _sigmoid(x.data)
    return _record("sigmoid", y, (x,), lambda g: (g * y * (1.0 - y),))


# ---------------------------------------------------------------- reductions

def mean(x: Tensor) -> Tensor:
    n = x.data.size
    return _record("mean", np.asarray(x.data.mean()), (x,), lambda g: (np.full_like(x.data, g / n),))


def sum_all(x: Tensor) -> Tensor:
    return _record("sum", np.asarray(x.data.sum()), (x,), lambda g: (np.full_like(x.data, g),))


def mse(a: Tensor, b) -> Tensor:
    """Mean of squared differences over all elements; ``b`` may be a constant array."""
    b = _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError("mse", a.shape, b.shape)
    diff = a.data - b.data
    n = diff.size

    def vjp(g):
        d = (2.0 / n) * g * diff
        return d, -d

    return _record("mse", np.asarray((diff * diff).mean()), (a, b), vjp)


# ---------------------------------------------------------------- structure

def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError("concat", *(t.shape for t in tensors)) from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def vjp(g):
        return np.split(g, bounds, axis=axis)

    return _record("concat", out, tensors, vjp)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    try:
        out = np.stack([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError("stack", *(t.shape for t in tensors)) from None

    def vjp(g):
        return [np.take(g, i, axis=axis) for i in range(len(tensors))]

    return _record("stack", out, tensors, vjp)


def columns(x: Tensor, start: int, stop: int) -> Tensor:
    """Slice ``x[..., start:stop]``."""
    if not 0 <= start < stop <= x.shape[-1]:
        raise ShapeError(f"columns[{start}:{stop}]", x.shape)

    def vjp(g):
        full = np.zeros_like(x.data)
        full[..., start:stop] = g
        return (full,)

    return _record("columns", x.data[..., start:stop], (x,), vjp)


# ---------------------------------------------------------------- layers

def affine(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """``x @ W + b`` for ``x`` of shape (N, in), ``W`` (in, out), ``b`` (out,)."""
    if x.data.ndim != 2 or W.data.ndim != 2 or x.shape[1] != W.shape[0] or b.shape != (W.shape[1],):
        raise ShapeError("affine", x.shape, W.shape, b.shape)
    out = x.data @ W.data + b.data

    def vjp(g):
        return (
            g @ W.data.T if x.requires_grad else None,
            x.data.T @ g if W.requires_grad else None,
            g.sum(axis=0) if b.requires_grad else None,
        )

    return _record("affine", out, (x, W, b), vjp)


def gru_cell(x: Tensor, h: Tensor, W: Tensor, U: Tensor, b: Tensor) -> Tensor:
    """One GRU step with the reset gate applied before the recurrent candidate product.

    ``W`` (in, 3H), ``U`` (H, 3H), ``b`` (3H,) hold the update, reset and candidate
    blocks in that order::

        z  = sigmoid(x Wz + h Uz + bz)
        r  = sigmoid(x Wr + h Ur + br)
        n  = tanh(x Wn + (r * h) Un + bn)
        h' = (1 - z) * h + z * n
    """
    H = h.shape[-1]
    if (x.data.ndim != 2 or h.data.ndim != 2 or x.shape[0] != h.shape[0] or W.shape != (x.shape[1], 3 * H)
            or U.shape != (H, 3 * H) or b.shape != (3 * H,)):
        raise ShapeError("gru_cell", x.shape, h.shape, W.shape, U.shape, b.shape)
    hd, Ud = h.data, U.data
    a = x.data @ W.data + b.data
    u = hd @ Ud[:, :2 * H]
    z = _sigmoid(a[:, :H] + u[:, :H])
    r = _sigmoid(a[:, H:2 * H] + u[:, H:])
    rh = r * hd
    n = np.tanh(a[:, 2 * H:] + rh @ Ud[:, 2 * H:])
    out = hd + z * (n - hd)

    def vjp(g):
        dn = g * z * (1.0 - n * n)
        dz = g * (n - hd) * z * (1.0 - z)
        drh = dn @ Ud[:, 2 * H:].T
        dr = drh * hd * r * (1.0 - r)
        dzr = np.concatenate([dz, dr], axis=1)
        da = np.concatenate([dzr, dn], axis=1)
        dh = None
        if h.requires_grad:
            dh = g * (1.0 - z) + drh * r + dzr @ Ud[:, :2 * H].T
        dU = None
        if U.requires_grad:
            dU = np.concatenate([hd.T @ dzr, rh.T @ dn], axis=1)
        return (
            da @ W.data.T if x.requires_grad else None,
            dh,
            x.data.T @ da if W.requires_grad else None,
            dU,
            da.sum(axis=0) if b.requires_grad else None,
        )

    return _record("gru_cell", out, (x, h, W, U, b), vjp)


def conv_output_size(size: int, kernel: int, stride: int) -> int:
    return (size - kernel) // stride + 1


def conv2d(x: Tensor, K: Tensor, b: Tensor | None = None, stride: int = 1) -> Tensor:
    """Valid convolution (cross-correlation) on NHWC input with ``K`` of shape (kh, kw, Cin, Cout)."""
    if x.data.ndim != 4 or K.data.ndim != 4 or x.shape[3] != K.shape[2] or x.shape[1] < K.shape[0] \
            or x.shape[2] < K.shape[1] or (b is not None and b.shape != (K.shape[3],)):
        raise ShapeError("conv2d", x.shape, K.shape, None if b is None else b.shape)
    N, Hin, Win, C = x.shape
    kh, kw, _, F = K.shape
    oh, ow = conv_output_size(Hin, kh, stride), conv_output_size(Win, kw, stride)
    win = sliding_window_view(x.data, (kh, kw), axis=(1, 2))[:, ::stride, ::stride][:, :oh, :ow]
    # (N, oh, ow, C, kh, kw) -> (N*oh*ow, kh*kw*C) matching K's layout
    cols = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(N * oh * ow, kh * kw * C)
    Kmat = K.data.reshape(kh * kw * C, F)
    out = cols @ Kmat
    if b is not None:
        out = out + b.data
    out = out.reshape(N, oh, ow, F)
    inputs = (x, K) if b is None else (x, K, b)

    def vjp(g):
        g2 = g.reshape(N * oh * ow, F)
        dK = (cols.T @ g2).reshape(K.shape) if K.requires_grad else None
        dx = None
        if x.requires_grad:
            dcols = (g2 @ Kmat.T).reshape(N, oh, ow, kh, kw, C)
            dx = np.zeros_like(x.data)
            for i in range(kh):
                for j in range(kw):
                    dx[:, i:i + stride * oh:stride, j:j + stride * ow:stride, :] += dcols[:, :, :, i, j, :]
        grads = [dx, dK]
        if b is not None:
            grads.append(g2.sum(axis=0) if b.requires_grad else None)
        return grads

    return _record("conv2d", out, inputs, vjp)


def group_norm(x: Tensor, groups: int, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Group normalisation over the trailing channel axis of an (N, ..., C) tensor."""
    C = x.shape[-1]
    if C % groups or gamma.shape != (C,) or beta.shape != (C,):
        raise ShapeError(f"group_norm(groups={groups})", x.shape, gamma.shape, beta.shape)
    N = x.shape[0]
    # (N, S, G, C/G) -> (N, G, S, C/G) so each group is contiguous on the last two axes
    xg = x.data.reshape(N, -1, groups, C // groups).transpose(0, 2, 1, 3)
    mu = xg.mean(axis=(2, 3), keepdims=True)
    var = xg.var(axis=(2, 3), keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat_g = (xg - mu) * inv
    xhat = xhat_g.transpose(0, 2, 1, 3).reshape(x.shape)
    out = xhat * gamma.data + beta.data
    M = xg.shape[2] * xg.shape[3]
    red = tuple(range(x.data.ndim - 1))

    def vjp(g):
        dx = None
        if x.requires_grad:
            dxhat = (g * gamma.data).reshape(N, -1, groups, C // groups).transpose(0, 2, 1, 3)
            s1 = dxhat.sum(axis=(2, 3), keepdims=True)
            s2 = (dxhat * xhat_g).sum(axis=(2, 3), keepdims=True)
            dxg = inv / M * (M * dxhat - s1 - xhat_g * s2)
            dx = dxg.transpose(0, 2, 1, 3).reshape(x.shape)
        return (
            dx,
            (g * xhat).sum(axis=red) if gamma.requires_grad else None,
            g.sum(axis=red) if beta.requires_grad else None,
        )

    return _record("group_norm", out, (x, gamma, beta), vjp)


def flatten(x: Tensor) -> Tensor:
    shape = x.shape
    return _record("flatten", x.data.reshape(shape[0], -1), (x,), lambda g: (g.reshape(shape),))


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    old = x.shape
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape to {shape}", old) from None
    return _record("reshape", out, (x,), lambda g: (g.reshape(old),))


def index(x: Tensor, t: int | slice) -> Tensor:
    """``x[t]`` along the leading axis; ``t`` may be a slice."""
    if not isinstance(t, slice) and not -x.shape[0] <= t < x.shape[0]:
        raise ShapeError(f"index[{t}]", x.shape)

    def vjp(g):
        full = np.zeros_like(x.data)
        full[t] = g
        return (full,)

    return _record("index", x.data[t], (x,), vjp)
