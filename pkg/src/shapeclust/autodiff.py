"""Reverse-mode automatic differentiation over numpy arrays.

A ``Tensor`` wraps a float64 ndarray and records, per operation, the parent
tensors and a vector-Jacobian closure for each. ``backward()`` on a scalar
topologically sorts the graph and accumulates gradients into every leaf
created with ``requires_grad=True``.

The causal convolution kernels (the hot path during training) have numba
and pure-numpy implementations, selected by the package backend flag.
"""

from __future__ import annotations

import numpy as np

from ._backend import NUMBA_ENABLED

if NUMBA_ENABLED:
    from numba import njit


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_vjps")

    def __init__(self, data, requires_grad: bool = False, _vjps=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._vjps = _vjps  # tuple of (parent Tensor, vjp callable)
        self.requires_grad = requires_grad or any(p.requires_grad for p, _ in _vjps)

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        if not self.requires_grad:
            raise ValueError("backward() on a graph with no differentiable leaves")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent, _ in node._vjps:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        for node in order:
            if node._vjps:  # interior nodes must not carry grads across calls
                node.grad = None
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            g = node.grad
            for parent, vjp in node._vjps:
                if not parent.requires_grad:
                    continue
                contrib = vjp(g)
                parent.grad = contrib if parent.grad is None else parent.grad + contrib

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        return Tensor(
            self.data + other.data,
            _vjps=(
                (self, lambda g: _unbroadcast(g, self.data.shape)),
                (other, lambda g: _unbroadcast(g, other.data.shape)),
            ),
        )

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.data, _vjps=((self, lambda g: -g),))

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        return Tensor(
            self.data * other.data,
            _vjps=(
                (self, lambda g: _unbroadcast(g * other.data, self.data.shape)),
                (other, lambda g: _unbroadcast(g * self.data, other.data.shape)),
            ),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        return Tensor(
            self.data / other.data,
            _vjps=(
                (self, lambda g: _unbroadcast(g / other.data, self.data.shape)),
                (
                    other,
                    lambda g: _unbroadcast(
                        -g * self.data / (other.data * other.data), other.data.shape
                    ),
                ),
            ),
        )

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, exponent):
        if not np.isscalar(exponent):
            raise TypeError("only scalar exponents are supported")
        out = self.data**exponent
        return Tensor(
            out,
            _vjps=((self, lambda g: g * exponent * self.data ** (exponent - 1)),),
        )

    def __matmul__(self, other):
        other = as_tensor(other)
        return Tensor(
            self.data @ other.data,
            _vjps=(
                (self, lambda g: g @ other.data.T),
                (other, lambda g: self.data.T @ g),
            ),
        )

    def __getitem__(self, index):
        if isinstance(index, (list, np.ndarray)):
            index = np.asarray(index)

        def vjp(g):
            out = np.zeros_like(self.data)
            np.add.at(out, index, g)
            return out

        return Tensor(self.data[index], _vjps=((self, vjp),))

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Tensor(
            self.data.reshape(shape),
            _vjps=((self, lambda g: g.reshape(self.data.shape)),),
        )

    def sum(self, axis=None, keepdims=False):
        def vjp(g):
            if axis is None:
                return np.broadcast_to(g, self.data.shape).copy()
            gg = g if keepdims else np.expand_dims(g, axis)
            return np.broadcast_to(gg, self.data.shape).copy()

        return Tensor(self.data.sum(axis=axis, keepdims=keepdims), _vjps=((self, vjp),))

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            count = self.data.size
        else:
            count = self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def exp(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.data)
    return Tensor(out, _vjps=((x, lambda g: g * out),))


def log(x: Tensor) -> Tensor:
    x = as_tensor(x)
    return Tensor(np.log(x.data), _vjps=((x, lambda g: g / x.data),))


def sqrt(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = np.sqrt(x.data)
    # 1e-300 guards the derivative at exactly zero without moving the value
    return Tensor(out, _vjps=((x, lambda g: g * 0.5 / (out + 1e-300)),))


def leaky_relu(x: Tensor, slope: float = 0.01) -> Tensor:
    x = as_tensor(x)
    mask = np.where(x.data > 0, 1.0, slope)
    return Tensor(x.data * mask, _vjps=((x, lambda g: g * mask),))


def stack(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = np.stack([t.data for t in tensors], axis=axis)

    def make_vjp(i):
        return lambda g: np.take(g, i, axis=axis)

    return Tensor(out, _vjps=tuple((t, make_vjp(i)) for i, t in enumerate(tensors)))


# -- causal dilated convolution kernels --------------------------------


def _conv1d_fwd_numpy(x, w, b, dilation):
    batch, c_in, length = x.shape
    c_out, _, k = w.shape
    pad = (k - 1) * dilation
    xp = np.concatenate([np.zeros((batch, c_in, pad)), x], axis=2)
    out = np.broadcast_to(b[None, :, None], (batch, c_out, length)).copy()
    for kk in range(k):
        lo = kk * dilation
        # (C_out, C_in) @ (B, C_in, L) broadcasts to (B, C_out, L)
        out += np.matmul(w[:, :, kk], xp[:, :, lo : lo + length])
    return out


def _conv1d_bwd_numpy(x, w, dout, dilation):
    batch, c_in, length = x.shape
    c_out, _, k = w.shape
    pad = (k - 1) * dilation
    xp = np.concatenate([np.zeros((batch, c_in, pad)), x], axis=2)
    dxp = np.zeros_like(xp)
    dw = np.empty_like(w)
    for kk in range(k):
        lo = kk * dilation
        dxp[:, :, lo : lo + length] += np.matmul(w[:, :, kk].T, dout)
        dw[:, :, kk] = np.tensordot(dout, xp[:, :, lo : lo + length], axes=([0, 2], [0, 2]))
    db = dout.sum(axis=(0, 2))
    return dxp[:, :, pad:], dw, db


if NUMBA_ENABLED:
    # inner loops run over contiguous time slices so LLVM can vectorize them

    @njit(cache=True, fastmath=True)
    def _conv1d_fwd_numba(x, w, b, dilation):  # pragma: no cover - jitted
        batch, c_in, length = x.shape
        c_out = w.shape[0]
        k = w.shape[2]
        pad = (k - 1) * dilation
        out = np.empty((batch, c_out, length))
        for bi in range(batch):
            for co in range(c_out):
                acc = np.full(length, b[co])
                for ci in range(c_in):
                    for kk in range(k):
                        shift = kk * dilation - pad  # <= 0
                        wgt = w[co, ci, kk]
                        for t in range(-shift, length):
                            acc[t] += wgt * x[bi, ci, t + shift]
                out[bi, co] = acc
        return out

    @njit(cache=True, fastmath=True)
    def _conv1d_bwd_numba(x, w, dout, dilation):  # pragma: no cover - jitted
        batch, c_in, length = x.shape
        c_out = w.shape[0]
        k = w.shape[2]
        pad = (k - 1) * dilation
        dx = np.zeros_like(x)
        dw = np.zeros_like(w)
        db = np.zeros(c_out)
        for bi in range(batch):
            for co in range(c_out):
                s = 0.0
                for t in range(length):
                    s += dout[bi, co, t]
                db[co] += s
                for ci in range(c_in):
                    for kk in range(k):
                        shift = kk * dilation - pad
                        wgt = w[co, ci, kk]
                        acc = 0.0
                        for t in range(-shift, length):
                            acc += dout[bi, co, t] * x[bi, ci, t + shift]
                            dx[bi, ci, t + shift] += wgt * dout[bi, co, t]
                        dw[co, ci, kk] += acc
        return dx, dw, db


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, dilation: int):
    """Causal dilated conv: out[t] reads x[t - (k-1)*d .. t], zero-padded left."""
    if NUMBA_ENABLED:
        return _conv1d_fwd_numba(
            np.ascontiguousarray(x), np.ascontiguousarray(w), b, dilation
        )
    return _conv1d_fwd_numpy(x, w, b, dilation)


def conv1d_backward(x, w, dout, dilation):
    if NUMBA_ENABLED:
        return _conv1d_bwd_numba(
            np.ascontiguousarray(x),
            np.ascontiguousarray(w),
            np.ascontiguousarray(dout),
            dilation,
        )
    return _conv1d_bwd_numpy(x, w, dout, dilation)


def causal_conv1d(x: Tensor, w: Tensor, b: Tensor, dilation: int = 1) -> Tensor:
    """Graph op over (B, C_in, L) -> (B, C_out, L)."""
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    out = conv1d_forward(x.data, w.data, b.data, dilation)
    cache: dict = {}

    def ensure(g):
        # one kernel launch serves all three vjps of a backward pass; keyed
        # on the upstream grad so a later backward recomputes
        if cache.get("g") is not g:
            cache["g"] = g
            cache["grads"] = conv1d_backward(x.data, w.data, g, dilation)
        return cache["grads"]

    return Tensor(
        out,
        _vjps=(
            (x, lambda g: ensure(g)[0]),
            (w, lambda g: ensure(g)[1]),
            (b, lambda g: ensure(g)[2]),
        ),
    )


def upsample2(x: Tensor) -> Tensor:
    """Nearest-neighbor x2 along the last axis of (B, C, L)."""
    x = as_tensor(x)
    out = np.repeat(x.data, 2, axis=-1)

    def vjp(g):
        return g[..., 0::2] + g[..., 1::2]

    return Tensor(out, _vjps=((x, vjp),))
