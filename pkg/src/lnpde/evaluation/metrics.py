"""Rollout error metrics.

The headline metric is the time- and trajectory-averaged relative L2
error (nRMSE): the initial frame is excluded (a rollout reproduces it up
to autoencoder error and it would dilute the average), and target frames
with vanishing norm are excluded from the average with a reported count
since their relative error is undefined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..training.losses import ZeroNormError

__all__ = ["ZERO_NORM_FLOOR", "NrmseResult", "nrmse", "relative_error_field"]

ZERO_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class NrmseResult:
    """Averaged relative L2 rollout error with its breakdowns.

    cells[n, j] is the relative error of trajectory n at time index j+1
    (frame 0 is excluded); NaN marks excluded zero-norm cells.
    """

    overall: float
    per_time: np.ndarray
    per_traj: np.ndarray
    cells: np.ndarray
    excluded: int


def _field_axes(arr: np.ndarray) -> tuple[int, ...]:
    return tuple(range(2, arr.ndim))


def nrmse(pred: np.ndarray, true: np.ndarray, zero_norm: str = "exclude") -> NrmseResult:
    """Mean over trajectories and time indices 1..F of |pred-true|/|true|.

    pred/true: [N, F+1, channels, *spatial].  zero_norm: "exclude" drops
    undefined cells from the average (count reported), "error" raises.
    """
    pred = np.asarray(pred, dtype=np.float64)
    true = np.asarray(true, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs true {true.shape}")
    if pred.ndim < 3 or pred.shape[1] < 2:
        raise ValueError("expected [N, F+1, channels, *spatial] with F >= 1")
    axes = _field_axes(pred)
    diff = np.sqrt(np.sum((pred - true) ** 2, axis=axes))[:, 1:]
    norm = np.sqrt(np.sum(true * true, axis=axes))[:, 1:]
    bad = norm < ZERO_NORM_FLOOR
    n_bad = int(np.count_nonzero(bad))
    if n_bad and zero_norm == "error":
        raise ZeroNormError(f"{n_bad} target frames have (near-)zero norm")
    if n_bad == norm.size:
        raise ZeroNormError("every target frame has (near-)zero norm")
    cells = np.where(bad, np.nan, diff / np.where(bad, 1.0, norm))
    return NrmseResult(
        overall=float(np.nanmean(cells)),
        per_time=np.nanmean(cells, axis=0),
        per_traj=np.nanmean(cells, axis=1),
        cells=cells,
        excluded=n_bad,
    )


def relative_error_field(pred: np.ndarray, true: np.ndarray) -> np.ndarray:
    """Pointwise |pred - true| divided by the scalar L2 norm of the frame."""
    pred = np.asarray(pred, dtype=np.float64)
    true = np.asarray(true, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs true {true.shape}")
    den = float(np.sqrt(np.sum(true * true)))
    if den < ZERO_NORM_FLOOR:
        raise ZeroNormError("true frame has (near-)zero norm")
    return np.abs(pred - true) / den
