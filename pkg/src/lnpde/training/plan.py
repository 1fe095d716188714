"""Training plan: loss weights, curriculum schedules, learning rate.

Two curriculum strategies are supported.  Strategy 1 trains the dynamics
purely teacher-forced with a one-step window (beta=1, gamma=0, k1=1).
Strategy 2 keeps the teacher-forced term and ramps in the autoregressive
term: its weight gamma grows linearly by gamma0 per epoch until it
reaches 1, and its window k2 grows by one every `k2_ramp` epochs until it
spans the whole trajectory.  Epochs are 1-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

__all__ = ["TrainPlan", "EpochWeights"]


@dataclass(frozen=True)
class EpochWeights:
    """Resolved per-epoch loss weights and schedule values."""

    alpha: float
    beta: float
    gamma: float
    delta: float
    lambda_rg: float
    k1: int
    k2: int
    lr: float


@dataclass
class TrainPlan:
    strategy: int = 2
    alpha: float = 1.0
    delta: float = 1.0
    lambda_rg: float = 0.0
    gamma0: float = 1.0 / 500.0
    k2_ramp: int = 30
    lr0: float = 1e-3
    gamma_lr: float = 0.997
    warmup_epochs: int = 0
    dynamics_off_epochs: int = 0
    batch_size: int = 16
    max_epochs: int = 5000
    patience: int = 200
    seed: int = 0
    guard: float = 1e6

    def __post_init__(self):
        if self.strategy not in (1, 2):
            raise ValueError(f"strategy must be 1 or 2, got {self.strategy}")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs and patience must be >= 1")
        if self.k2_ramp < 1:
            raise ValueError("k2_ramp must be >= 1")

    def learning_rate(self, epoch: int) -> float:
        """lr0 * gamma_lr^(epoch-1), scaled by the linear warmup ramp."""
        lr = self.lr0 * self.gamma_lr ** (epoch - 1)
        if self.warmup_epochs > 0 and epoch < self.warmup_epochs:
            lr *= epoch / self.warmup_epochs
        return lr

    def resolve(self, epoch: int, frames: int) -> EpochWeights:
        """Weights for a 1-based epoch on trajectories with `frames`
        transition steps."""
        if epoch < 1:
            raise ValueError("epochs are 1-based")
        if self.strategy == 1:
            beta, gamma, k2 = 1.0, 0.0, 1
        else:
            beta = 1.0
            gamma = min(1.0, epoch * self.gamma0)
            k2 = min(frames, 1 + (epoch // self.k2_ramp))
        delta = self.delta
        if epoch <= self.dynamics_off_epochs:
            beta = gamma = delta = 0.0
        return EpochWeights(
            alpha=self.alpha,
            beta=beta,
            gamma=gamma,
            delta=delta,
            lambda_rg=self.lambda_rg,
            k1=1,
            k2=k2,
            lr=self.learning_rate(epoch),
        )

    def to_meta(self) -> dict:
        return asdict(self)

    @classmethod
    def from_meta(cls, meta: dict) -> "TrainPlan":
        return cls(**meta)
