"""Parameter initialization."""

import numpy as np

from .tensor import Tensor

__all__ = ["kaiming_uniform_init"]


def kaiming_uniform_init(shape, fan_in, gain=1.0, rng=None, dtype=np.float32):
    """Kaiming-uniform samples on [-bound, bound], bound = gain*sqrt(6/fan_in).

    gain defaults to 1.0 for every layer (including GELU layers); the bound
    convention is the he-uniform limit sqrt(6/fan_in).
    """
    if fan_in <= 0:
        raise ValueError(f"fan_in must be positive, got {fan_in}")
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    bound = float(gain) * np.sqrt(6.0 / float(fan_in))
    values = rng.uniform(-bound, bound, size=tuple(shape)).astype(dtype)
    return Tensor(values, requires_grad=True)
