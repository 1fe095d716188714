# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels (hot path of the autodiff engine).

Drop-in replacement for `_numpy_kernels`; selected at import by
`lnpde.autodiff.kernels`. Single-threaded on purpose: training determinism
is part of the package contract.

The inner loops run over the contiguous last axis through raw pointers and
are specialized for stride 1 and stride 2 so the C compiler can vectorize
them; other strides fall back to a generic loop.
"""

import numpy as np

cimport numpy as cnp

ctypedef fused real:
    float
    double


cdef inline Py_ssize_t _jlo(Py_ssize_t k, Py_ssize_t padding, Py_ssize_t stride) noexcept nogil:
    if padding > k:
        return (padding - k + stride - 1) // stride
    return 0


cdef inline Py_ssize_t _jhi(Py_ssize_t k, Py_ssize_t padding, Py_ssize_t stride,
                            Py_ssize_t n_in, Py_ssize_t n_out) noexcept nogil:
    cdef Py_ssize_t t = n_in - 1 - k + padding
    if t < 0:
        return 0
    t = t // stride + 1
    if t > n_out:
        return n_out
    return t


cdef inline void _axpy_gather(real* y, const real* x, real wv,
                              Py_ssize_t lo, Py_ssize_t hi,
                              Py_ssize_t stride, Py_ssize_t off) noexcept nogil:
    # y[j] += wv * x[stride*j + off] over [lo, hi)
    cdef Py_ssize_t j
    if stride == 1:
        for j in range(lo, hi):
            y[j] += wv * x[j + off]
    elif stride == 2:
        for j in range(lo, hi):
            y[j] += wv * x[2 * j + off]
    else:
        for j in range(lo, hi):
            y[j] += wv * x[stride * j + off]


cdef inline void _axpy_scatter(real* y, const real* g, real wv,
                               Py_ssize_t lo, Py_ssize_t hi,
                               Py_ssize_t stride, Py_ssize_t off) noexcept nogil:
    # y[stride*j + off] += wv * g[j] over [lo, hi)
    cdef Py_ssize_t j
    if stride == 1:
        for j in range(lo, hi):
            y[j + off] += wv * g[j]
    elif stride == 2:
        for j in range(lo, hi):
            y[2 * j + off] += wv * g[j]
    else:
        for j in range(lo, hi):
            y[stride * j + off] += wv * g[j]


cdef inline real _dot_gather(const real* g, const real* x,
                             Py_ssize_t lo, Py_ssize_t hi,
                             Py_ssize_t stride, Py_ssize_t off) noexcept nogil:
    # sum over j in [lo, hi) of g[j] * x[stride*j + off], 4 accumulators
    cdef Py_ssize_t j = lo
    cdef Py_ssize_t n4 = lo + ((hi - lo) // 4) * 4
    cdef real a0 = 0, a1 = 0, a2 = 0, a3 = 0
    if stride == 1:
        while j < n4:
            a0 += g[j] * x[j + off]
            a1 += g[j + 1] * x[j + 1 + off]
            a2 += g[j + 2] * x[j + 2 + off]
            a3 += g[j + 3] * x[j + 3 + off]
            j += 4
        while j < hi:
            a0 += g[j] * x[j + off]
            j += 1
    elif stride == 2:
        while j < n4:
            a0 += g[j] * x[2 * j + off]
            a1 += g[j + 1] * x[2 * j + 2 + off]
            a2 += g[j + 2] * x[2 * j + 4 + off]
            a3 += g[j + 3] * x[2 * j + 6 + off]
            j += 4
        while j < hi:
            a0 += g[j] * x[2 * j + off]
            j += 1
    else:
        while j < hi:
            a0 += g[j] * x[stride * j + off]
            j += 1
    return (a0 + a1) + (a2 + a3)


def conv1d_forward(const real[:, :, ::1] x, const real[:, :, ::1] w,
                   Py_ssize_t stride, Py_ssize_t padding):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], X = x.shape[2]
    cdef Py_ssize_t O = w.shape[0], K = w.shape[2]
    cdef Py_ssize_t Y = (X + 2 * padding - K) // stride + 1
    out = np.zeros((B, O, Y), dtype=np.float32 if real is float else np.float64)
    cdef real[:, :, ::1] y = out
    cdef Py_ssize_t b, o, c, k, lo, hi
    cdef real wv
    with nogil:
        for b in range(B):
            for o in range(O):
                for c in range(C):
                    for k in range(K):
                        wv = w[o, c, k]
                        if wv == 0:
                            continue
                        lo = _jlo(k, padding, stride)
                        hi = _jhi(k, padding, stride, X, Y)
                        if lo < hi:
                            _axpy_gather(&y[b, o, 0], &x[b, c, 0], wv,
                                         lo, hi, stride, k - padding)
    return out


def conv1d_grad_input(const real[:, :, ::1] g, const real[:, :, ::1] w,
                      Py_ssize_t stride, Py_ssize_t padding, Py_ssize_t in_size):
    cdef Py_ssize_t B = g.shape[0], O = g.shape[1], Y = g.shape[2]
    cdef Py_ssize_t C = w.shape[1], K = w.shape[2]
    out = np.zeros((B, C, in_size), dtype=np.float32 if real is float else np.float64)
    cdef real[:, :, ::1] gx = out
    cdef Py_ssize_t b, o, c, k, lo, hi
    cdef real wv
    with nogil:
        for b in range(B):
            for o in range(O):
                for c in range(C):
                    for k in range(K):
                        wv = w[o, c, k]
                        if wv == 0:
                            continue
                        lo = _jlo(k, padding, stride)
                        hi = _jhi(k, padding, stride, in_size, Y)
                        if lo < hi:
                            _axpy_scatter(&gx[b, c, 0], &g[b, o, 0], wv,
                                          lo, hi, stride, k - padding)
    return out


def conv1d_grad_weight(const real[:, :, ::1] g, const real[:, :, ::1] x,
                       Py_ssize_t stride, Py_ssize_t padding, Py_ssize_t kernel):
    cdef Py_ssize_t B = g.shape[0], O = g.shape[1], Y = g.shape[2]
    cdef Py_ssize_t C = x.shape[1], X = x.shape[2]
    out = np.zeros((O, C, kernel), dtype=np.float32 if real is float else np.float64)
    cdef real[:, :, ::1] gw = out
    cdef Py_ssize_t b, o, c, k, lo, hi
    cdef real acc
    with nogil:
        for o in range(O):
            for c in range(C):
                for k in range(kernel):
                    lo = _jlo(k, padding, stride)
                    hi = _jhi(k, padding, stride, X, Y)
                    acc = 0
                    for b in range(B):
                        acc += _dot_gather(&g[b, o, 0], &x[b, c, 0],
                                           lo, hi, stride, k - padding)
                    gw[o, c, k] = acc
    return out


def conv2d_forward(const real[:, :, :, ::1] x, const real[:, :, :, ::1] w,
                   Py_ssize_t stride, Py_ssize_t padding):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef Py_ssize_t O = w.shape[0], Kh = w.shape[2], Kw = w.shape[3]
    cdef Py_ssize_t Yh = (H + 2 * padding - Kh) // stride + 1
    cdef Py_ssize_t Yw = (W + 2 * padding - Kw) // stride + 1
    out = np.zeros((B, O, Yh, Yw), dtype=np.float32 if real is float else np.float64)
    cdef real[:, :, :, ::1] y = out
    cdef Py_ssize_t b, o, c, kh, kw, jh, ih, hlo, hhi, wlo, whi
    cdef real wv
    with nogil:
        for b in range(B):
            for o in range(O):
                for c in range(C):
                    for kh in range(Kh):
                        hlo = _jlo(kh, padding, stride)
                        hhi = _jhi(kh, padding, stride, H, Yh)
                        for kw in range(Kw):
                            wv = w[o, c, kh, kw]
                            if wv == 0:
                                continue
                            wlo = _jlo(kw, padding, stride)
                            whi = _jhi(kw, padding, stride, W, Yw)
                            if wlo >= whi:
                                continue
                            ih = hlo * stride + kh - padding
                            for jh in range(hlo, hhi):
                                _axpy_gather(&y[b, o, jh, 0], &x[b, c, ih, 0],
                                             wv, wlo, whi, stride, kw - padding)
                                ih += stride
    return out


def conv2d_grad_input(const real[:, :, :, ::1] g, const real[:, :, :, ::1] w,
                      Py_ssize_t stride, Py_ssize_t padding,
                      Py_ssize_t in_h, Py_ssize_t in_w):
    cdef Py_ssize_t B = g.shape[0], O = g.shape[1], Yh = g.shape[2], Yw = g.shape[3]
    cdef Py_ssize_t C = w.shape[1], Kh = w.shape[2], Kw = w.shape[3]
    out = np.zeros((B, C, in_h, in_w), dtype=np.float32 if real is float else np.float64)
    cdef real[:, :, :, ::1] gx = out
    cdef Py_ssize_t b, o, c, kh, kw, jh, ih, hlo, hhi, wlo, whi
    cdef real wv
    with nogil:
        for b in range(B):
            for o in range(O):
                for c in range(C):
                    for kh in range(Kh):
                        hlo = _jlo(kh, padding, stride)
                        hhi = _jhi(kh, padding, stride, in_h, Yh)
                        for kw in range(Kw):
                            wv = w[o, c, kh, kw]
                            if wv == 0:
                                continue
                            wlo = _jlo(kw, padding, stride)
                            whi = _jhi(kw, padding, stride, in_w, Yw)
                            if wlo >= whi:
                                continue
                            ih = hlo * stride + kh - padding
                            for jh in range(hlo, hhi):
                                _axpy_scatter(&gx[b, c, ih, 0], &g[b, o, jh, 0],
                                              wv, wlo, whi, stride, kw - padding)
                                ih += stride
    return out


def conv2d_grad_weight(const real[:, :, :, ::1] g, const real[:, :, :, ::1] x,
                       Py_ssize_t stride, Py_ssize_t padding,
                       Py_ssize_t kernel_h, Py_ssize_t kernel_w):
    cdef Py_ssize_t B = g.shape[0], O = g.shape[1], Yh = g.shape[2], Yw = g.shape[3]
    cdef Py_ssize_t C = x.shape[1], H = x.shape[2], W = x.shape[3]
    out = np.zeros((O, C, kernel_h, kernel_w),
                   dtype=np.float32 if real is float else np.float64)
    cdef real[:, :, :, ::1] gw = out
    cdef Py_ssize_t b, o, c, kh, kw, jh, ih, hlo, hhi, wlo, whi
    cdef real acc
    with nogil:
        for o in range(O):
            for c in range(C):
                for kh in range(kernel_h):
                    hlo = _jlo(kh, padding, stride)
                    hhi = _jhi(kh, padding, stride, H, Yh)
                    for kw in range(kernel_w):
                        wlo = _jlo(kw, padding, stride)
                        whi = _jhi(kw, padding, stride, W, Yw)
                        acc = 0
                        if wlo < whi:
                            for b in range(B):
                                ih = hlo * stride + kh - padding
                                for jh in range(hlo, hhi):
                                    acc += _dot_gather(&g[b, o, jh, 0],
                                                       &x[b, c, ih, 0],
                                                       wlo, whi, stride,
                                                       kw - padding)
                                    ih += stride
                        gw[o, c, kh, kw] = acc
    return out
