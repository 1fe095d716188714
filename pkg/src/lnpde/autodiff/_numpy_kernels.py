"""Pure-numpy convolution kernels (fallback backend).

Same contract as the compiled `_convcore` extension: channels-first layouts,
zero padding, integer stride shared across spatial axes. Implemented as a
loop over kernel taps with BLAS-backed contractions, which keeps the
fallback usable at training sizes.
"""

import numpy as np


def _out_size(n, k, stride, padding):
    return (n + 2 * padding - k) // stride + 1


# ---------------------------------------------------------------- 1-D


def conv1d_forward(x, w, stride, padding):
    # x [B,C,X], w [O,C,K] -> y [B,O,Y]
    B, C, X = x.shape
    O, _, K = w.shape
    Y = _out_size(X, K, stride, padding)
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding))) if padding else x
    y = np.zeros((B, O, Y), dtype=x.dtype)
    for k in range(K):
        xs = xp[:, :, k : k + (Y - 1) * stride + 1 : stride]
        y += np.einsum("oc,bcy->boy", w[:, :, k], xs, optimize=True)
    return y


def conv1d_grad_input(g, w, stride, padding, in_size):
    # g [B,O,Y] -> dL/dx [B,C,X]
    B, O, Y = g.shape
    _, C, K = w.shape
    gxp = np.zeros((B, C, in_size + 2 * padding), dtype=g.dtype)
    for k in range(K):
        gxp[:, :, k : k + (Y - 1) * stride + 1 : stride] += np.einsum(
            "oc,boy->bcy", w[:, :, k], g, optimize=True
        )
    return gxp[:, :, padding : padding + in_size] if padding else gxp


def conv1d_grad_weight(g, x, stride, padding, kernel):
    # g [B,O,Y], x [B,C,X] -> dL/dw [O,C,K]
    B, O, Y = g.shape
    _, C, X = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding))) if padding else x
    gw = np.zeros((O, C, kernel), dtype=g.dtype)
    for k in range(kernel):
        xs = xp[:, :, k : k + (Y - 1) * stride + 1 : stride]
        gw[:, :, k] = np.einsum("boy,bcy->oc", g, xs, optimize=True)
    return gw


# ---------------------------------------------------------------- 2-D


def conv2d_forward(x, w, stride, padding):
    # x [B,C,H,W], w [O,C,Kh,Kw] -> y [B,O,Yh,Yw]
    B, C, H, W = x.shape
    O, _, Kh, Kw = w.shape
    Yh = _out_size(H, Kh, stride, padding)
    Yw = _out_size(W, Kw, stride, padding)
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    y = np.zeros((B, O, Yh, Yw), dtype=x.dtype)
    for kh in range(Kh):
        for kw in range(Kw):
            xs = x[
                :,
                :,
                kh : kh + (Yh - 1) * stride + 1 : stride,
                kw : kw + (Yw - 1) * stride + 1 : stride,
            ]
            y += np.einsum("oc,bchw->bohw", w[:, :, kh, kw], xs, optimize=True)
    return y


def conv2d_grad_input(g, w, stride, padding, in_h, in_w):
    B, O, Yh, Yw = g.shape
    _, C, Kh, Kw = w.shape
    gxp = np.zeros((B, C, in_h + 2 * padding, in_w + 2 * padding), dtype=g.dtype)
    for kh in range(Kh):
        for kw in range(Kw):
            gxp[
                :,
                :,
                kh : kh + (Yh - 1) * stride + 1 : stride,
                kw : kw + (Yw - 1) * stride + 1 : stride,
            ] += np.einsum("oc,bohw->bchw", w[:, :, kh, kw], g, optimize=True)
    if padding:
        return gxp[:, :, padding : padding + in_h, padding : padding + in_w]
    return gxp


def conv2d_grad_weight(g, x, stride, padding, kernel_h, kernel_w):
    B, O, Yh, Yw = g.shape
    _, C, H, W = x.shape
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    gw = np.zeros((O, C, kernel_h, kernel_w), dtype=g.dtype)
    for kh in range(kernel_h):
        for kw in range(kernel_w):
            xs = x[
                :,
                :,
                kh : kh + (Yh - 1) * stride + 1 : stride,
                kw : kw + (Yw - 1) * stride + 1 : stride,
            ]
            gw[:, :, kh, kw] = np.einsum("bohw,bchw->oc", g, xs, optimize=True)
    return gw
