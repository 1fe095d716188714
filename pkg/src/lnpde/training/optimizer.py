"""Adam with bias correction over the module parameter dict.

The step is atomic: all gradients are validated before any parameter or
moment is touched, so a NaN gradient aborts cleanly without corrupting
the optimizer state.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Adam", "NanGradientError"]


class NanGradientError(RuntimeError):
    """A parameter gradient contains NaN or infinity."""

    def __init__(self, names):
        super().__init__(f"non-finite gradients for parameters: {sorted(names)}")
        self.names = tuple(sorted(names))


class Adam:
    def __init__(self, named_params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(named_params)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self, lr: float) -> None:
        """One update with the given learning rate; params without a
        gradient are left untouched."""
        live = {k: p for k, p in self.params.items() if p.grad is not None}
        bad = [k for k, p in live.items() if not np.all(np.isfinite(p.grad))]
        if bad:
            raise NanGradientError(bad)
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, p in live.items():
            g = p.grad
            m = self.m[k]
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data = p.data - lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"t": np.array([self.t], dtype=np.int64)}
        for k in self.params:
            out["m/" + k] = self.m[k]
            out["v/" + k] = self.v[k]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        self.t = int(arrays["t"][0])
        for k, p in self.params.items():
            m = np.asarray(arrays["m/" + k], dtype=p.data.dtype)
            v = np.asarray(arrays["v/" + k], dtype=p.data.dtype)
            if m.shape != p.data.shape or v.shape != p.data.shape:
                raise ValueError(f"optimizer state shape mismatch for {k}")
            self.m[k] = m
            self.v[k] = v
