"""Convolutional encoder / decoder pair between fields and latent vectors.

Encoder: one stride-1 convolution, then stride-2 convolutions each halving
every spatial extent, GELU after every convolution, flatten, and a final
linear layer with no activation so the latent values stay unconstrained.

Decoder: a linear layer (no activation), reshape to the coarsest feature
map, stride-2 transposed convolutions each doubling every extent with GELU,
and a final stride-1 transposed convolution with no activation. The decoder
may carry extra stride-1 layers at the end; the number of doublings is
configurable and defaults to len(filters) - 1 to mirror the encoder.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .. import nn
from ..autodiff import ops
from ..autodiff.tensor import Tensor

__all__ = ["EncoderConfig", "DecoderConfig", "Encoder", "Decoder"]


def _as_extent(extent) -> tuple[int, ...]:
    if isinstance(extent, int):
        return (extent,)
    return tuple(int(e) for e in extent)


@dataclass(frozen=True)
class EncoderConfig:
    """Shape contract of the encoder.

    channels: field channels m
    extent: spatial point counts, one entry per dimension (1D or 2D)
    filters: output channels per convolution; len(filters) - 1 halvings
    kernels: kernel size per convolution, same length as filters
    latent: latent dimension
    """

    channels: int
    extent: tuple[int, ...]
    filters: tuple[int, ...]
    kernels: tuple[int, ...]
    latent: int
    bias_free: bool = False
    final_gelu: bool = False

    def __post_init__(self):
        object.__setattr__(self, "extent", _as_extent(self.extent))
        object.__setattr__(self, "filters", tuple(int(f) for f in self.filters))
        object.__setattr__(self, "kernels", tuple(int(k) for k in self.kernels))
        if len(self.extent) not in (1, 2):
            raise ValueError("only 1D and 2D fields are supported")
        if len(self.filters) != len(self.kernels):
            raise ValueError("filters and kernels must have the same length")
        if len(self.filters) < 1:
            raise ValueError("need at least one convolution")
        div = 2 ** self.halvings
        for e in self.extent:
            if e % div != 0:
                raise ValueError(
                    f"extent {self.extent} not divisible by 2^{self.halvings}; "
                    "reduce the number of filters or refine the grid"
                )
        full = self.channels * math.prod(self.extent)
        if self.latent >= full // 4:
            warnings.warn(
                f"latent dimension {self.latent} is not small against the "
                f"field size {full}; expected latent < {full // 4}",
                stacklevel=2,
            )

    @property
    def spatial_dims(self) -> int:
        return len(self.extent)

    @property
    def halvings(self) -> int:
        return len(self.filters) - 1

    @property
    def coarse_extent(self) -> tuple[int, ...]:
        div = 2 ** self.halvings
        return tuple(e // div for e in self.extent)

    @property
    def flat_size(self) -> int:
        return self.filters[-1] * math.prod(self.coarse_extent)

    def to_meta(self) -> dict:
        return {
            "channels": self.channels,
            "extent": list(self.extent),
            "filters": list(self.filters),
            "kernels": list(self.kernels),
            "latent": self.latent,
            "bias_free": self.bias_free,
            "final_gelu": self.final_gelu,
        }

    @classmethod
    def from_meta(cls, meta: dict) -> "EncoderConfig":
        return cls(
            channels=int(meta["channels"]),
            extent=tuple(meta["extent"]),
            filters=tuple(meta["filters"]),
            kernels=tuple(meta["kernels"]),
            latent=int(meta["latent"]),
            bias_free=bool(meta.get("bias_free", False)),
            final_gelu=bool(meta.get("final_gelu", False)),
        )


@dataclass(frozen=True)
class DecoderConfig:
    """Shape contract of the decoder.

    filters: output channels per transposed convolution position; the first
        entry is the channel count of the reshaped feature map. The i-th
        transposed convolution maps filters[i-1] -> filters[i], and the last
        maps filters[-1] -> channels.
    doublings: number of stride-2 layers (placed first); remaining layers
        run at stride 1. None mirrors an encoder: len(filters) - 1.
    """

    channels: int
    extent: tuple[int, ...]
    filters: tuple[int, ...]
    kernels: tuple[int, ...]
    latent: int
    doublings: int | None = None
    first_gelu: bool = False

    def __post_init__(self):
        object.__setattr__(self, "extent", _as_extent(self.extent))
        object.__setattr__(self, "filters", tuple(int(f) for f in self.filters))
        object.__setattr__(self, "kernels", tuple(int(k) for k in self.kernels))
        if self.doublings is None:
            object.__setattr__(self, "doublings", len(self.filters) - 1)
        if len(self.extent) not in (1, 2):
            raise ValueError("only 1D and 2D fields are supported")
        if len(self.filters) != len(self.kernels):
            raise ValueError("filters and kernels must have the same length")
        if not 0 <= self.doublings <= len(self.filters):
            raise ValueError("doublings must lie in [0, len(filters)]")
        div = 2 ** self.doublings
        for e in self.extent:
            if e % div != 0:
                raise ValueError(
                    f"extent {self.extent} not divisible by 2^{self.doublings}"
                )

    @property
    def spatial_dims(self) -> int:
        return len(self.extent)

    @property
    def coarse_extent(self) -> tuple[int, ...]:
        div = 2 ** self.doublings
        return tuple(e // div for e in self.extent)

    @property
    def flat_size(self) -> int:
        return self.filters[0] * math.prod(self.coarse_extent)

    def strides(self) -> tuple[int, ...]:
        n = len(self.filters)
        return (2,) * self.doublings + (1,) * (n - self.doublings)

    def to_meta(self) -> dict:
        return {
            "channels": self.channels,
            "extent": list(self.extent),
            "filters": list(self.filters),
            "kernels": list(self.kernels),
            "latent": self.latent,
            "doublings": self.doublings,
            "first_gelu": self.first_gelu,
        }

    @classmethod
    def from_meta(cls, meta: dict) -> "DecoderConfig":
        return cls(
            channels=int(meta["channels"]),
            extent=tuple(meta["extent"]),
            filters=tuple(meta["filters"]),
            kernels=tuple(meta["kernels"]),
            latent=int(meta["latent"]),
            doublings=int(meta["doublings"]),
            first_gelu=bool(meta.get("first_gelu", False)),
        )


class Encoder(nn.Module):
    """Maps a batch of fields [B, m, *extent] to latent vectors [B, latent]."""

    def __init__(self, config: EncoderConfig, rng=None, dtype=np.float64):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        conv_cls = nn.Conv1d if config.spatial_dims == 1 else nn.Conv2d
        bias = not config.bias_free
        convs = []
        in_ch = config.channels
        for i, (f, k) in enumerate(zip(config.filters, config.kernels)):
            stride = 1 if i == 0 else 2
            convs.append(conv_cls(in_ch, f, k, stride=stride, bias=bias, rng=rng,
                                  dtype=dtype))
            in_ch = f
        for i, c in enumerate(convs):
            setattr(self, f"conv{i}", c)
        self.head = nn.Linear(config.flat_size, config.latent, bias=bias, rng=rng,
                              dtype=dtype)
        self._convs = convs

    def __call__(self, x: Tensor) -> Tensor:
        cfg = self.config
        expected = (cfg.channels,) + cfg.extent
        if x.shape[1:] != expected:
            raise ValueError(f"encoder expects [B, {expected}], got {x.shape}")
        for c in self._convs:
            x = ops.gelu(c(x))
        z = self.head(ops.flatten(x))
        if cfg.final_gelu:
            z = ops.gelu(z)
        return z


class Decoder(nn.Module):
    """Maps latent vectors [B, latent] back to fields [B, m, *extent]."""

    def __init__(self, config: DecoderConfig, rng=None, dtype=np.float64):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        tconv_cls = nn.ConvTranspose1d if config.spatial_dims == 1 else nn.ConvTranspose2d
        self.head = nn.Linear(config.latent, config.flat_size, rng=rng, dtype=dtype)
        tconvs = []
        chans = list(config.filters) + [config.channels]
        for i, (k, s) in enumerate(zip(config.kernels, config.strides())):
            tconvs.append(tconv_cls(chans[i], chans[i + 1], k, stride=s, rng=rng,
                                    dtype=dtype))
        for i, c in enumerate(tconvs):
            setattr(self, f"tconv{i}", c)
        self._tconvs = tconvs

    def __call__(self, z: Tensor) -> Tensor:
        cfg = self.config
        if z.ndim != 2 or z.shape[1] != cfg.latent:
            raise ValueError(f"decoder expects [B, {cfg.latent}], got {z.shape}")
        x = self.head(z)
        if cfg.first_gelu:
            x = ops.gelu(x)
        x = ops.reshape(x, (z.shape[0], cfg.filters[0]) + cfg.coarse_extent)
        last = len(self._tconvs) - 1
        for i, c in enumerate(self._tconvs):
            x = c(x)
            if i != last:
                x = ops.gelu(x)
        return x
