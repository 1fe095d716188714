"""Differentiable op set.

Every op follows the same pattern: compute the forward value with numpy (or
a conv kernel backend), then register a closure that maps the output
gradient to input gradients. Elementwise ops broadcast like numpy; reduction
ops accept an ``axis`` tuple. Convolutions are channels-first with integer
stride/padding shared across spatial axes.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from . import kernels
from .tensor import Tensor, as_tensor

__all__ = [
    "add", "sub", "mul", "div", "matmul", "scale", "gelu", "reshape",
    "flatten", "concat", "narrow", "mean", "l1_norm", "l2_norm",
    "conv1d", "conv2d", "conv_transpose1d", "conv_transpose2d",
    "stop_gradient", "forward_op", "FORWARD_OPS",
]

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _acc(t: Tensor, g: np.ndarray) -> None:
    if t.requires_grad:
        t._accumulate(g)


def _pair(a, b):
    """Lift the non-Tensor operand to the Tensor operand's dtype."""
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        return a, Tensor(b, dtype=a.dtype)
    if isinstance(b, Tensor) and not isinstance(a, Tensor):
        return Tensor(a, dtype=b.dtype), b
    return as_tensor(a), as_tensor(b)


# ------------------------------------------------------------ elementwise


def add(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        _acc(a, _unbroadcast(g, a.data.shape))
        _acc(b, _unbroadcast(g, b.data.shape))

    return Tensor._from_op(a.data + b.data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        _acc(a, _unbroadcast(g, a.data.shape))
        _acc(b, _unbroadcast(-g, b.data.shape))

    return Tensor._from_op(a.data - b.data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        _acc(a, _unbroadcast(g * b.data, a.data.shape))
        _acc(b, _unbroadcast(g * a.data, b.data.shape))

    return Tensor._from_op(a.data * b.data, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data

    def backward(g):
        _acc(a, _unbroadcast(g / b.data, a.data.shape))
        _acc(b, _unbroadcast(-g * out / b.data, b.data.shape))

    return Tensor._from_op(out, (a, b), backward, "div")


def scale(a, factor: float) -> Tensor:
    a = as_tensor(a)
    factor = float(factor)

    def backward(g):
        _acc(a, g * factor)

    return Tensor._from_op(a.data * np.asarray(factor, dtype=a.dtype), (a,), backward, "scale")


def gelu(a) -> Tensor:
    """Exact Gaussian-CDF GELU: x * Phi(x), not the tanh approximation."""
    a = as_tensor(a)
    x = a.data
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))

    def backward(g):
        pdf = np.exp(-0.5 * x * x) * _INV_SQRT2PI
        _acc(a, g * (cdf + x * pdf))

    return Tensor._from_op((x * cdf).astype(x.dtype, copy=False), (a,), backward, "gelu")


# ------------------------------------------------------------ linear algebra


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.shape} @ {b.shape}")

    def backward(g):
        _acc(a, g @ b.data.T)
        _acc(b, a.data.T @ g)

    return Tensor._from_op(a.data @ b.data, (a, b), backward, "matmul")


# ------------------------------------------------------------ shape ops


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    shape = tuple(shape)
    in_shape = a.data.shape

    def backward(g):
        _acc(a, g.reshape(in_shape))

    return Tensor._from_op(a.data.reshape(shape), (a,), backward, "reshape")


def flatten(a, start_axis: int = 1) -> Tensor:
    a = as_tensor(a)
    lead = a.data.shape[:start_axis]
    return reshape(a, lead + (-1,))


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            _acc(t, g[tuple(idx)])

    out = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor._from_op(out, tuple(tensors), backward, "concat")


def narrow(a, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice of `length` entries along `axis`."""
    a = as_tensor(a)
    if start < 0 or start + length > a.data.shape[axis]:
        raise ValueError(
            f"narrow out of range: axis {axis} size {a.data.shape[axis]}, "
            f"requested [{start}, {start + length})"
        )
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)

    def backward(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[idx] = g
            a._accumulate(full)

    return Tensor._from_op(np.ascontiguousarray(a.data[idx]), (a,), backward, "narrow")


# ------------------------------------------------------------ reductions


def _norm_axes(a: Tensor, axis):
    if axis is None:
        return tuple(range(a.ndim))
    if isinstance(axis, int):
        return (axis,)
    return tuple(axis)


def mean(a, axis=None) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(a, axis)
    n = int(np.prod([a.data.shape[i] for i in axes])) or 1

    def backward(g):
        ge = np.expand_dims(g, axes)
        _acc(a, np.broadcast_to(ge, a.data.shape) / n)

    return Tensor._from_op(a.data.mean(axis=axes), (a,), backward, "mean")


def l1_norm(a, axis=None) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(a, axis)

    def backward(g):
        ge = np.expand_dims(g, axes)
        _acc(a, np.broadcast_to(ge, a.data.shape) * np.sign(a.data))

    return Tensor._from_op(np.abs(a.data).sum(axis=axes), (a,), backward, "l1_norm")


def l2_norm(a, axis=None) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(a, axis)
    out = np.sqrt((a.data * a.data).sum(axis=axes))

    def backward(g):
        # subgradient 0 at the origin (guard avoids 0/0)
        ge = np.expand_dims(g, axes)
        oe = np.expand_dims(out, axes)
        denom = np.maximum(oe, np.finfo(a.dtype).tiny)
        _acc(a, np.broadcast_to(ge / denom, a.data.shape) * a.data)

    return Tensor._from_op(out, (a,), backward, "l2_norm")


# ------------------------------------------------------------ convolutions


def _check_conv_args(x, w, spatial_dims, stride, padding):
    if x.ndim != spatial_dims + 2 or w.ndim != spatial_dims + 2:
        raise ValueError(
            f"conv{spatial_dims}d expects rank-{spatial_dims + 2} input/weight, "
            f"got {x.shape} / {w.shape}"
        )
    if stride < 1 or padding < 0:
        raise ValueError(f"bad stride/padding: {stride}/{padding}")


def conv1d(x, w, stride: int = 1, padding: int = 0) -> Tensor:
    x, w = as_tensor(x), as_tensor(w)
    _check_conv_args(x, w, 1, stride, padding)
    if x.data.shape[1] != w.data.shape[1]:
        raise ValueError(f"channel mismatch: input {x.shape}, weight {w.shape}")
    xd = np.ascontiguousarray(x.data)
    wd = np.ascontiguousarray(w.data)
    in_size = xd.shape[2]
    k = wd.shape[2]
    out = kernels.conv1d_forward(xd, wd, stride, padding)

    def backward(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            x._accumulate(kernels.conv1d_grad_input(g, wd, stride, padding, in_size))
        if w.requires_grad:
            w._accumulate(kernels.conv1d_grad_weight(g, xd, stride, padding, k))

    return Tensor._from_op(out, (x, w), backward, "conv1d")


def conv2d(x, w, stride: int = 1, padding: int = 0) -> Tensor:
    x, w = as_tensor(x), as_tensor(w)
    _check_conv_args(x, w, 2, stride, padding)
    if x.data.shape[1] != w.data.shape[1]:
        raise ValueError(f"channel mismatch: input {x.shape}, weight {w.shape}")
    xd = np.ascontiguousarray(x.data)
    wd = np.ascontiguousarray(w.data)
    in_h, in_w = xd.shape[2], xd.shape[3]
    kh, kw = wd.shape[2], wd.shape[3]
    out = kernels.conv2d_forward(xd, wd, stride, padding)

    def backward(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            x._accumulate(kernels.conv2d_grad_input(g, wd, stride, padding, in_h, in_w))
        if w.requires_grad:
            w._accumulate(kernels.conv2d_grad_weight(g, xd, stride, padding, kh, kw))

    return Tensor._from_op(out, (x, w), backward, "conv2d")


def _transpose_out_size(n, k, stride, padding, output_padding):
    return (n - 1) * stride - 2 * padding + k + output_padding


def conv_transpose1d(x, w, stride: int = 1, padding: int = 0,
                     output_padding: int = 0) -> Tensor:
    """Transposed conv, the adjoint of conv1d. Weight layout [C_in, C_out, K]."""
    x, w = as_tensor(x), as_tensor(w)
    _check_conv_args(x, w, 1, stride, padding)
    if output_padding < 0 or output_padding >= stride:
        raise ValueError(f"output_padding must be in [0, stride), got {output_padding}")
    if x.data.shape[1] != w.data.shape[0]:
        raise ValueError(f"channel mismatch: input {x.shape}, weight {w.shape}")
    xd = np.ascontiguousarray(x.data)
    wd = np.ascontiguousarray(w.data)
    out_size = _transpose_out_size(xd.shape[2], wd.shape[2], stride, padding, output_padding)
    if out_size < 1:
        raise ValueError("transposed conv output size < 1")
    out = kernels.conv1d_grad_input(xd, wd, stride, padding, out_size)

    def backward(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            x._accumulate(kernels.conv1d_forward(g, wd, stride, padding))
        if w.requires_grad:
            w._accumulate(kernels.conv1d_grad_weight(xd, g, stride, padding, wd.shape[2]))

    return Tensor._from_op(out, (x, w), backward, "conv_transpose1d")


def conv_transpose2d(x, w, stride: int = 1, padding: int = 0,
                     output_padding: int = 0) -> Tensor:
    x, w = as_tensor(x), as_tensor(w)
    _check_conv_args(x, w, 2, stride, padding)
    if output_padding < 0 or output_padding >= stride:
        raise ValueError(f"output_padding must be in [0, stride), got {output_padding}")
    if x.data.shape[1] != w.data.shape[0]:
        raise ValueError(f"channel mismatch: input {x.shape}, weight {w.shape}")
    xd = np.ascontiguousarray(x.data)
    wd = np.ascontiguousarray(w.data)
    out_h = _transpose_out_size(xd.shape[2], wd.shape[2], stride, padding, output_padding)
    out_w = _transpose_out_size(xd.shape[3], wd.shape[3], stride, padding, output_padding)
    if out_h < 1 or out_w < 1:
        raise ValueError("transposed conv output size < 1")
    out = kernels.conv2d_grad_input(xd, wd, stride, padding, out_h, out_w)

    def backward(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            x._accumulate(kernels.conv2d_forward(g, wd, stride, padding))
        if w.requires_grad:
            w._accumulate(kernels.conv2d_grad_weight(xd, g, stride, padding,
                                                     wd.shape[2], wd.shape[3]))

    return Tensor._from_op(out, (x, w), backward, "conv_transpose2d")


# ------------------------------------------------------------ graph control


def stop_gradient(a) -> Tensor:
    """Forward identity; blocks gradient flow entirely."""
    return as_tensor(a).detach()


# ------------------------------------------------------------ dispatch

FORWARD_OPS = {
    "add": lambda inputs, **at: add(*inputs),
    "sub": lambda inputs, **at: sub(*inputs),
    "mul": lambda inputs, **at: mul(*inputs),
    "div": lambda inputs, **at: div(*inputs),
    "matmul": lambda inputs, **at: matmul(*inputs),
    "scale": lambda inputs, **at: scale(inputs[0], **at),
    "gelu": lambda inputs, **at: gelu(*inputs),
    "reshape": lambda inputs, **at: reshape(inputs[0], **at),
    "concat": lambda inputs, **at: concat(inputs, **at),
    "narrow": lambda inputs, **at: narrow(inputs[0], **at),
    "mean": lambda inputs, **at: mean(inputs[0], **at),
    "l1_norm": lambda inputs, **at: l1_norm(inputs[0], **at),
    "l2_norm": lambda inputs, **at: l2_norm(inputs[0], **at),
    "conv1d": lambda inputs, **at: conv1d(*inputs, **at),
    "conv2d": lambda inputs, **at: conv2d(*inputs, **at),
    "conv_transpose1d": lambda inputs, **at: conv_transpose1d(*inputs, **at),
    "conv_transpose2d": lambda inputs, **at: conv_transpose2d(*inputs, **at),
    "stop_gradient": lambda inputs, **at: stop_gradient(*inputs),
}


def forward_op(kind: str, inputs, attrs: dict | None = None) -> Tensor:
    """Name-based dispatch into the op set (used by the gradient-check gate)."""
    try:
        fn = FORWARD_OPS[kind]
    except KeyError:
        raise ValueError(f"unknown op kind {kind!r}") from None
    return fn(list(inputs), **(attrs or {}))
