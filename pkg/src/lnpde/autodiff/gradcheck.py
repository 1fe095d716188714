"""Central finite-difference gradient checking.

The oracle only ever evaluates forward passes: a candidate op is scalarized
through a fixed random projection, each input element is perturbed by +/-
step, and the centered quotient is compared against the gradient the engine
reports. This keeps the check independent of the backward code it verifies.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, no_grad

__all__ = ["finite_difference_grad", "check_gradients"]


def finite_difference_grad(f, arrays, wrt, step=1e-5):
    """d f(arrays) / d arrays[wrt] by central differences, elementwise.

    f maps a list of ndarrays to a float and is evaluated 2*size times.
    """
    base = [np.array(a, dtype=np.float64) for a in arrays]
    target = base[wrt]
    grad = np.zeros_like(target)
    flat = target.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fplus = f(base)
        flat[i] = orig - step
        fminus = f(base)
        flat[i] = orig
        gflat[i] = (fplus - fminus) / (2.0 * step)
    return grad


def check_gradients(op_fn, arrays, rng=None, step=1e-5):
    """Compare engine gradients of a random linear functional of `op_fn`
    against the finite-difference oracle.

    Returns the worst relative error over all inputs. Inputs are promoted to
    float64; the op must accept Tensors and return a Tensor.
    """
    rng = np.random.default_rng(rng)
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]

    with no_grad():
        probe_out = op_fn([Tensor(a) for a in arrays])
    weights = rng.standard_normal(probe_out.shape)

    def scalar_from_arrays(arrs):
        with no_grad():
            out = op_fn([Tensor(a) for a in arrs])
        return float((out.data * weights).sum())

    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    out = op_fn(tensors)
    loss_data = (out.data * weights).sum()
    # scalarize through the engine as well so backward sees one graph
    from . import ops

    loss = ops.mean(ops.mul(out, Tensor(weights * out.size, dtype=out.dtype)))
    assert abs(loss.item() - loss_data) < 1e-8 * max(1.0, abs(loss_data))
    loss.backward()

    worst = 0.0
    for i, t in enumerate(tensors):
        fd = finite_difference_grad(scalar_from_arrays, arrays, i, step=step)
        got = t.grad if t.grad is not None else np.zeros_like(arrays[i])
        denom = max(float(np.max(np.abs(fd))), 1e-8)
        rel = float(np.max(np.abs(got - fd))) / denom
        worst = max(worst, rel)
    return worst
