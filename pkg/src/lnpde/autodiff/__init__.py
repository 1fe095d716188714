"""Reverse-mode autodiff engine: tensors, ops, init, gradient checking."""

from . import kernels, ops
from .gradcheck import check_gradients, finite_difference_grad
from .init import kaiming_uniform_init
from .tensor import (
    AutodiffError,
    GraphConsumedError,
    NonFiniteError,
    Tensor,
    as_tensor,
    is_grad_enabled,
    no_grad,
    set_check_finite,
)

__all__ = [
    "Tensor",
    "as_tensor",
    "no_grad",
    "is_grad_enabled",
    "set_check_finite",
    "AutodiffError",
    "NonFiniteError",
    "GraphConsumedError",
    "ops",
    "kernels",
    "kaiming_uniform_init",
    "check_gradients",
    "finite_difference_grad",
]
