"""Minimal layer library on top of the autodiff engine.

Modules register parameters and child modules through attribute assignment
(micrograd/torch style) and expose ordered, dotted parameter names so
checkpoints and the optimizer see a stable layout.
"""

from __future__ import annotations

import numpy as np

from .autodiff import ops
from .autodiff.init import kaiming_uniform_init
from .autodiff.tensor import Tensor

__all__ = [
    "Module",
    "Linear",
    "Conv1d",
    "Conv2d",
    "ConvTranspose1d",
    "ConvTranspose2d",
    "conv_same_padding",
    "transpose_same_padding",
]


def conv_same_padding(kernel: int, stride: int) -> int:
    """Padding so a conv keeps the extent (stride 1, odd kernel) or exactly
    halves an even extent (stride 2, any kernel): (K-1)//2."""
    if stride == 1 and kernel % 2 == 0:
        raise ValueError("even kernels at stride 1 cannot preserve the extent")
    return (kernel - 1) // 2


def transpose_same_padding(kernel: int, stride: int) -> tuple[int, int]:
    """(padding, output_padding) so a transposed conv keeps the extent at
    stride 1 or exactly doubles it at stride 2.

    Even kernels double with symmetric padding (K-2)/2; odd kernels need
    output_padding 1 on top of (K-1)/2.
    """
    if stride == 1:
        if kernel % 2 == 0:
            raise ValueError("even kernels at stride 1 cannot preserve the extent")
        return (kernel - 1) // 2, 0
    if stride == 2:
        if kernel % 2 == 0:
            return (kernel - 2) // 2, 0
        return (kernel - 1) // 2, 1
    raise ValueError(f"unsupported stride {stride}")


class Module:
    """Base class tracking parameters and submodules in insertion order."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_modules", {})

    def __setattr__(self, name, value):
        if isinstance(value, Tensor):
            self._params[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = ""):
        for name, p in self._params.items():
            yield (prefix + name, p)
        for name, mod in self._modules.items():
            yield from mod.named_parameters(prefix + name + ".")

    def parameters(self):
        for _, p in self.named_parameters():
            yield p

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: p.data for name, p in self.named_parameters()}

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        if set(own) != set(arrays):
            missing = set(own) - set(arrays)
            extra = set(arrays) - set(own)
            raise ValueError(f"state mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for name, p in own.items():
            arr = np.asarray(arrays[name], dtype=p.dtype)
            if arr.shape != p.data.shape:
                raise ValueError(
                    f"shape mismatch for {name}: {arr.shape} vs {p.data.shape}"
                )
            p.data = arr

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())


class Linear(Module):
    def __init__(self, in_features, out_features, bias=True, rng=None,
                 dtype=np.float32):
        super().__init__()
        self.weight = kaiming_uniform_init(
            (in_features, out_features), fan_in=in_features, rng=rng, dtype=dtype
        )
        if bias:
            self.bias = Tensor(np.zeros(out_features, dtype=dtype), requires_grad=True)
        else:
            object.__setattr__(self, "bias", None)

    def __call__(self, x: Tensor) -> Tensor:
        y = ops.matmul(x, self.weight)
        if self.bias is not None:
            y = ops.add(y, self.bias)
        return y


class _ConvBase(Module):
    spatial_dims = 1

    def __init__(self, in_channels, out_channels, kernel, stride=1,
                 padding=None, bias=True, rng=None, dtype=np.float32):
        super().__init__()
        if padding is None:
            padding = conv_same_padding(kernel, stride)
        self.stride = stride
        self.padding = padding
        kshape = (kernel,) * self.spatial_dims
        fan_in = in_channels * kernel**self.spatial_dims
        self.weight = kaiming_uniform_init(
            (out_channels, in_channels) + kshape, fan_in=fan_in, rng=rng, dtype=dtype
        )
        if bias:
            self.bias = Tensor(np.zeros(out_channels, dtype=dtype), requires_grad=True)
        else:
            object.__setattr__(self, "bias", None)

    def _add_bias(self, y: Tensor) -> Tensor:
        if self.bias is None:
            return y
        bshape = (1, self.bias.shape[0]) + (1,) * self.spatial_dims
        return ops.add(y, ops.reshape(self.bias, bshape))


class Conv1d(_ConvBase):
    spatial_dims = 1

    def __call__(self, x: Tensor) -> Tensor:
        return self._add_bias(ops.conv1d(x, self.weight, self.stride, self.padding))


class Conv2d(_ConvBase):
    spatial_dims = 2

    def __call__(self, x: Tensor) -> Tensor:
        return self._add_bias(ops.conv2d(x, self.weight, self.stride, self.padding))


class _ConvTransposeBase(Module):
    spatial_dims = 1

    def __init__(self, in_channels, out_channels, kernel, stride=1,
                 padding=None, output_padding=None, bias=True, rng=None,
                 dtype=np.float32):
        super().__init__()
        if padding is None or output_padding is None:
            auto_p, auto_op = transpose_same_padding(kernel, stride)
            padding = auto_p if padding is None else padding
            output_padding = auto_op if output_padding is None else output_padding
        self.stride = stride
        self.padding = padding
        self.output_padding = output_padding
        kshape = (kernel,) * self.spatial_dims
        fan_in = in_channels * kernel**self.spatial_dims
        # weight layout [C_in, C_out, K...]: forward is the conv adjoint
        self.weight = kaiming_uniform_init(
            (in_channels, out_channels) + kshape, fan_in=fan_in, rng=rng, dtype=dtype
        )
        if bias:
            self.bias = Tensor(np.zeros(out_channels, dtype=dtype), requires_grad=True)
        else:
            object.__setattr__(self, "bias", None)

    def _add_bias(self, y: Tensor) -> Tensor:
        if self.bias is None:
            return y
        bshape = (1, self.bias.shape[0]) + (1,) * self.spatial_dims
        return ops.add(y, ops.reshape(self.bias, bshape))


class ConvTranspose1d(_ConvTransposeBase):
    spatial_dims = 1

    def __call__(self, x: Tensor) -> Tensor:
        return self._add_bias(
            ops.conv_transpose1d(x, self.weight, self.stride, self.padding,
                                 self.output_padding)
        )


class ConvTranspose2d(_ConvTransposeBase):
    spatial_dims = 2

    def __call__(self, x: Tensor) -> Tensor:
        return self._add_bias(
            ops.conv_transpose2d(x, self.weight, self.stride, self.padding,
                                 self.output_padding)
        )
