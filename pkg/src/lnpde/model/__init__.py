"""Surrogate model: autoencoder, latent dynamics, Runge-Kutta processor."""

from .autoencoder import Decoder, DecoderConfig, Encoder, EncoderConfig
from .dynamics import (
    DivergenceError,
    DynamicsMLP,
    default_conditioning,
    rk_step,
    rollout,
)
from .surrogate import (
    CHECKPOINT_MAGIC,
    SurrogateModel,
    load_checkpoint,
    save_checkpoint,
)
from .tableau import ButcherTableau, euler, get_tableau, kutta3, midpoint, rk4

__all__ = [
    "ButcherTableau",
    "CHECKPOINT_MAGIC",
    "Decoder",
    "DecoderConfig",
    "DivergenceError",
    "DynamicsMLP",
    "Encoder",
    "EncoderConfig",
    "SurrogateModel",
    "default_conditioning",
    "euler",
    "get_tableau",
    "kutta3",
    "load_checkpoint",
    "midpoint",
    "rk4",
    "rk_step",
    "rollout",
    "save_checkpoint",
]
