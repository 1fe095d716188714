"""Convolution kernel backend selection.

Two interchangeable implementations exist: a compiled Cython core with
scalar loops and a numpy fallback that reduces each kernel tap to BLAS
calls. Measurements (see benchmarks/bench_kernels.py) show the compiled
core wins on small calls where Python dispatch dominates, while the BLAS
path wins once a call does enough arithmetic; ``auto`` therefore routes
each call by its estimated multiply count. The split point depends only
on shapes, so runs stay deterministic.

`LNPDE_KERNELS` overrides: `auto` (default), `compiled` (always use the
extension, fail if missing), or `python` (never use it).
"""

import os

from . import _numpy_kernels as _nk

_requested = os.environ.get("LNPDE_KERNELS", "auto")
if _requested not in ("auto", "compiled", "python"):
    raise ValueError(
        f"LNPDE_KERNELS must be auto|compiled|python, got {_requested!r}"
    )

_cc = None
if _requested in ("auto", "compiled"):
    try:
        from . import _convcore as _cc  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "LNPDE_KERNELS=compiled but the lnpde.autodiff._convcore "
                "extension is not built; reinstall the package or use "
                "LNPDE_KERNELS=python"
            ) from None

if _cc is None:
    BACKEND = "python"
elif _requested == "compiled":
    BACKEND = "compiled"
else:
    BACKEND = "auto"

# measured crossover between the scalar core and the BLAS path, in MACs
_SMALL_CALL = 1 << 18


def backend_name() -> str:
    return BACKEND


def has_compiled() -> bool:
    return _cc is not None


def _pick(macs):
    if BACKEND == "python":
        return _nk
    if BACKEND == "compiled":
        return _cc
    return _cc if macs < _SMALL_CALL else _nk


def _out_len(n, k, stride, padding):
    return (n + 2 * padding - k) // stride + 1


def conv1d_forward(x, w, stride, padding):
    o, c, k = w.shape
    macs = x.shape[0] * o * c * k * _out_len(x.shape[2], k, stride, padding)
    return _pick(macs).conv1d_forward(x, w, stride, padding)


def conv1d_grad_input(g, w, stride, padding, in_size):
    o, c, k = w.shape
    macs = g.shape[0] * o * c * k * g.shape[2]
    return _pick(macs).conv1d_grad_input(g, w, stride, padding, in_size)


def conv1d_grad_weight(g, x, stride, padding, kernel):
    macs = g.shape[0] * g.shape[1] * g.shape[2] * x.shape[1] * kernel
    return _pick(macs).conv1d_grad_weight(g, x, stride, padding, kernel)


def conv2d_forward(x, w, stride, padding):
    o, c, kh, kw = w.shape
    yh = _out_len(x.shape[2], kh, stride, padding)
    yw = _out_len(x.shape[3], kw, stride, padding)
    macs = x.shape[0] * o * c * kh * kw * yh * yw
    return _pick(macs).conv2d_forward(x, w, stride, padding)


def conv2d_grad_input(g, w, stride, padding, in_h, in_w):
    o, c, kh, kw = w.shape
    macs = g.shape[0] * o * c * kh * kw * g.shape[2] * g.shape[3]
    return _pick(macs).conv2d_grad_input(g, w, stride, padding, in_h, in_w)


def conv2d_grad_weight(g, x, stride, padding, kernel_h, kernel_w):
    macs = (g.shape[0] * g.shape[1] * g.shape[2] * g.shape[3]
            * x.shape[1] * kernel_h * kernel_w)
    return _pick(macs).conv2d_grad_weight(g, x, stride, padding,
                                          kernel_h, kernel_w)
