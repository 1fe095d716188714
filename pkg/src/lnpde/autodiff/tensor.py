"""Reverse-mode automatic differentiation on numpy arrays.

A ``Tensor`` wraps an ndarray (float32 or float64) and, when it results from
an op applied to gradient-requiring inputs, remembers its parents and a
backward closure. ``backward()`` on a scalar visits the recorded graph once
in reverse topological order and accumulates gradients into every
``requires_grad`` tensor's ``grad`` buffer. Values are immutable after
creation; only grad buffers (and optimizer-rebound leaf data) mutate.

Each graph supports exactly one backward pass: traversed nodes are released
afterwards (memory) and re-entry raises ``GraphConsumedError``.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "no_grad",
    "is_grad_enabled",
    "set_check_finite",
    "AutodiffError",
    "NonFiniteError",
    "GraphConsumedError",
]

_grad_enabled = True
_check_finite = True

# Marker left on released op nodes so a second traversal fails loudly
# instead of silently producing partial gradients.
_CONSUMED = object()


class AutodiffError(RuntimeError):
    pass


class NonFiniteError(AutodiffError):
    """An op produced NaN/Inf from finite inputs (e.g. division by zero)."""


class GraphConsumedError(AutodiffError):
    """backward() reached a node whose graph was already consumed."""


class no_grad:
    """Context manager that disables graph recording (forward values only)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def is_grad_enabled() -> bool:
    return _grad_enabled


def set_check_finite(enabled: bool) -> None:
    """Toggle the per-op NaN/Inf check (on by default)."""
    global _check_finite
    _check_finite = bool(enabled)


_FLOAT_TYPES = (np.float32, np.float64)


def _as_float_array(data, dtype=None) -> np.ndarray:
    arr = np.asarray(data, dtype=dtype)
    if arr.dtype not in _FLOAT_TYPES:
        arr = arr.astype(np.float64)
    return arr


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = _as_float_array(data, dtype)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward_fn = None

    # -- construction from ops -------------------------------------------

    @classmethod
    def _from_op(cls, data: np.ndarray, parents, backward_fn, op_name: str):
        if _check_finite and not np.all(np.isfinite(data)):
            raise NonFiniteError(f"op '{op_name}' produced non-finite values")
        t = cls.__new__(cls)
        t.data = data
        t.grad = None
        if _grad_enabled and any(p.requires_grad for p in parents):
            t.requires_grad = True
            t._parents = tuple(parents)
            t._backward_fn = backward_fn
        else:
            t.requires_grad = False
            t._parents = ()
            t._backward_fn = None
        return t

    # -- introspection ----------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(()))

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    # -- gradient plumbing --------------------------------------------------

    def detach(self) -> "Tensor":
        """Value-sharing tensor cut out of the graph (stop-gradient)."""
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            # copy: backward closures may hand us views of shared buffers
            self.grad = g.copy() if isinstance(g, np.ndarray) else np.asarray(g)
        else:
            self.grad = self.grad + g

    def backward(self) -> None:
        """Accumulate dself/dleaf into every requires_grad tensor reachable
        from this scalar. One shot per recorded graph."""
        if self.size != 1:
            raise AutodiffError(
                f"backward() requires a scalar, got shape {self.data.shape}"
            )
        if self._backward_fn is _CONSUMED:
            raise GraphConsumedError("backward() called on a consumed graph")

        # iterative post-order topological sort (rollout graphs get deep)
        order: list[Tensor] = []
        visited = {id(self)}
        stack = [(self, iter(self._parents))]
        while stack:
            node, it = stack[-1]
            for parent in it:
                if parent._backward_fn is _CONSUMED:
                    raise GraphConsumedError(
                        "graph shares nodes with an already-consumed graph"
                    )
                if id(parent) not in visited and parent.requires_grad:
                    visited.add(id(parent))
                    stack.append((parent, iter(parent._parents)))
                    break
            else:
                order.append(node)
                stack.pop()

        self._accumulate(np.ones_like(self.data))
        for node in reversed(order):
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)

        # release the graph; leaves keep their grads and stay reusable
        for node in order:
            if node._parents:
                node._parents = ()
                node._backward_fn = _CONSUMED

    # -- operator sugar (thin wrappers over lnpde.autodiff.ops) -----------

    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops

        return ops.div(self, other)

    def __rtruediv__(self, other):
        from . import ops

        return ops.div(other, self)

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, other)

    def __neg__(self):
        from . import ops

        return ops.scale(self, -1.0)

    def reshape(self, *shape):
        from . import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)


def as_tensor(x, dtype=None) -> Tensor:
    """Lift arrays/scalars to constant Tensors; pass Tensors through."""
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)
