"""Latent right-hand side and its Runge-Kutta time stepping.

The latent state evolves as an autonomous ODE d eps/dt = f(eps, mu). The
right-hand side is an MLP with GELU hidden layers and a linear output;
parameters condition it either by concatenation (input width latent + z)
or through a feature-wise affine map alpha(mu) * eps + tau(mu).

One processor application is a single explicit Runge-Kutta step over the
full inter-frame interval; there is no internal substepping.
"""

from __future__ import annotations

import numpy as np

from .. import nn
from ..autodiff import ops
from ..autodiff.tensor import Tensor
from .tableau import ButcherTableau

__all__ = ["DynamicsMLP", "DivergenceError", "rk_step", "rollout", "default_conditioning"]

CONDITIONING_MODES = ("concat", "film")


class DivergenceError(RuntimeError):
    """A rollout state left the trust region (norm above the guard bound)."""

    def __init__(self, step: int, value: float, bound: float):
        super().__init__(
            f"latent rollout diverged at step {step}: max |eps| = {value:.3e} "
            f"exceeds the guard bound {bound:.1e}"
        )
        self.step = step
        self.value = value
        self.bound = bound


def default_conditioning(z: int) -> str:
    """Concatenation for small parameter vectors, FiLM for larger ones."""
    return "concat" if z <= 2 else "film"


class DynamicsMLP(nn.Module):
    """f(eps, mu) -> d eps/dt as an MLP.

    latent: latent dimension
    z: parameter dimension (0 for fixed-parameter problems)
    hidden: widths of the GELU hidden layers
    conditioning: "concat" or "film"
    """

    def __init__(self, latent: int, z: int, hidden, conditioning: str = "concat",
                 rng=None, dtype=np.float64):
        super().__init__()
        if conditioning not in CONDITIONING_MODES:
            raise ValueError(f"conditioning must be one of {CONDITIONING_MODES}")
        if conditioning == "film" and z < 1:
            raise ValueError("film conditioning needs at least one parameter")
        self.latent = latent
        self.z = z
        self.hidden = tuple(int(w) for w in hidden)
        self.conditioning = conditioning
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        if conditioning == "film":
            self.alpha = nn.Linear(z, latent, rng=rng, dtype=dtype)
            self.tau = nn.Linear(z, latent, rng=rng, dtype=dtype)
            width = latent
        else:
            width = latent + z
        layers = []
        for w in self.hidden:
            layers.append(nn.Linear(width, w, rng=rng, dtype=dtype))
            width = w
        layers.append(nn.Linear(width, latent, rng=rng, dtype=dtype))
        for i, l in enumerate(layers):
            setattr(self, f"fc{i}", l)
        self._layers = layers

    def __call__(self, eps: Tensor, mu: Tensor) -> Tensor:
        if eps.ndim != 2 or eps.shape[1] != self.latent:
            raise ValueError(f"expected eps [B, {self.latent}], got {eps.shape}")
        if mu.ndim != 2 or mu.shape[1] != self.z:
            raise ValueError(f"expected mu [B, {self.z}], got {mu.shape}")
        if self.conditioning == "film":
            x = ops.add(ops.mul(self.alpha(mu), eps), self.tau(mu))
        elif self.z == 0:
            x = eps
        else:
            x = ops.concat([eps, mu], axis=1)
        last = len(self._layers) - 1
        for i, l in enumerate(self._layers):
            x = l(x)
            if i != last:
                x = ops.gelu(x)
        return x


def _scaled(x: Tensor, dt) -> Tensor:
    """dt * x with dt either a python scalar or a broadcastable Tensor."""
    if isinstance(dt, Tensor):
        return ops.mul(dt, x)
    return ops.scale(x, float(dt))


def rk_step(f, eps: Tensor, mu: Tensor, dt, tableau: ButcherTableau) -> Tensor:
    """One explicit Runge-Kutta step of d eps/dt = f(eps, mu).

    dt may be a scalar (shared step) or a Tensor of shape [B, 1] holding a
    per-sample step; the latter supports randomly split intervals during
    training. Differentiable end to end, including through dt Tensors.
    """
    a, h = tableau.a, tableau.h
    stages = []
    for k in range(tableau.stage):
        y = eps
        for l in range(k):
            if a[k, l] != 0.0:
                y = ops.add(y, _scaled(ops.scale(stages[l], float(a[k, l])), dt))
        stages.append(f(y, mu))
    incr = None
    for j in range(tableau.stage):
        if h[j] == 0.0:
            continue
        term = ops.scale(stages[j], float(h[j]))
        incr = term if incr is None else ops.add(incr, term)
    return ops.add(eps, _scaled(incr, dt))


def rollout(f, eps0: Tensor, mu: Tensor, dts, tableau: ButcherTableau,
            guard: float = 1e6):
    """Advance eps0 through consecutive steps dts; returns [eps0, ..., epsF].

    Each interval is covered by a single rk_step. States whose magnitude
    exceeds ``guard`` abort with DivergenceError; non-finite values are
    already rejected by the autodiff layer.
    """
    states = [eps0]
    eps = eps0
    for i, dt in enumerate(dts):
        eps = rk_step(f, eps, mu, dt, tableau)
        peak = float(np.max(np.abs(eps.data))) if eps.size else 0.0
        if peak > guard:
            raise DivergenceError(i + 1, peak, guard)
        states.append(eps)
    return states
