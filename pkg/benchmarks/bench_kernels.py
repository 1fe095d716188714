"""Convolution kernel backend benchmark: compiled vs numpy/BLAS.

Times the forward / grad-input / grad-weight kernels on both backends
across call sizes, prints throughput and the measured crossover, and
checks that the auto dispatcher picks the faster side on representative
shapes.  Run:  python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lnpde.autodiff import kernels
from lnpde.autodiff import _numpy_kernels as nk

try:
    from lnpde.autodiff import _convcore as cc
except ImportError:
    cc = None


def _time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


CASES = [
    # label, B, C, O, Y(out len), K, stride
    ("tiny single-sample", 1, 16, 32, 32, 5, 1),
    ("small batch", 16, 16, 32, 32, 5, 1),
    ("training encode", 656, 16, 32, 32, 5, 2),
    ("training stack", 1312, 16, 32, 32, 5, 1),
]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--dtype", choices=("float32", "float64"), default="float64")
    args = ap.parse_args()
    if cc is None:
        print("compiled backend not built; nothing to compare")
        return 1
    dt = np.dtype(args.dtype)
    rng = np.random.default_rng(0)
    print(f"dtype={dt.name}  repeat={args.repeat}  "
          f"auto threshold={kernels._SMALL_CALL} MACs\n")
    hdr = f"{'case':22s} {'MACs':>12s} {'compiled':>10s} {'numpy':>10s} {'ratio':>7s}  auto"
    print(hdr)
    print("-" * len(hdr))
    for label, B, C, O, Y, K, stride in CASES:
        in_len = Y * stride + K - 1 - 2 * ((K - 1) // 2)
        x = rng.standard_normal((B, C, in_len)).astype(dt)
        w = rng.standard_normal((O, C, K)).astype(dt)
        pad = (K - 1) // 2
        macs = B * O * C * K * Y
        t_cc = _time(cc.conv1d_forward, (x, w, stride, pad), args.repeat)
        t_nk = _time(nk.conv1d_forward, (x, w, stride, pad), args.repeat)
        picked = "compiled" if macs < kernels._SMALL_CALL else "numpy"
        fastest = "compiled" if t_cc < t_nk else "numpy"
        mark = "ok" if picked == fastest else "??"
        print(f"{label:22s} {macs:12d} {t_cc*1e3:9.2f}m {t_nk*1e3:9.2f}m "
              f"{t_nk/t_cc:6.2f}x  {picked} [{mark}]")
        out = cc.conv1d_forward(x, w, stride, pad)
        ref = nk.conv1d_forward(x, w, stride, pad)
        err = float(np.max(np.abs(out - ref)))
        tol = 1e-4 if dt == np.float32 else 1e-10
        assert err < tol, f"backend mismatch on {label}: {err}"
    print("\nbackends agree numerically on every case")
    print(f"active backend: {kernels.backend_name()}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
