"""Training: loss terms, curriculum plans, Adam, and the epoch loop."""

from .losses import (
    ZeroNormError,
    encode_frames,
    frame_major,
    frame_norms,
    latent_frame,
    loss_ar,
    loss_recon,
    loss_reg,
    loss_tf,
    loss_timegen,
    rollout_field_error,
    total_train_loss,
    validation_loss,
)
from .loop import CSV_HEADER, train
from .optimizer import Adam, NanGradientError
from .plan import EpochWeights, TrainPlan

__all__ = [
    "Adam",
    "CSV_HEADER",
    "EpochWeights",
    "NanGradientError",
    "TrainPlan",
    "ZeroNormError",
    "encode_frames",
    "frame_major",
    "frame_norms",
    "latent_frame",
    "loss_ar",
    "loss_recon",
    "loss_reg",
    "loss_tf",
    "loss_timegen",
    "rollout_field_error",
    "total_train_loss",
    "train",
    "validation_loss",
]
