"""Trajectory dataset container, normalization, and splitting.

On disk a dataset is an `LNPDS1` container: JSON metadata (grid, time grid,
channel/parameter counts, normalization stats, generator provenance
including the seed) followed by float32 little-endian arrays
`fields [traj, time, channel, *spatial]` and `params [traj, z]`. Externally
produced files in the same layout load through the same path.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .._binio import ContainerError, read_container, write_container
from .grid import GridSpec, TimeGrid

__all__ = ["NormStats", "TrajectoryDataset", "split_counts", "split_indices"]

MAGIC = b"LNPDS1"


@dataclass
class NormStats:
    """Max-min statistics from a training split.

    Fields normalize to (s - min)/(max - min); parameters normalize per
    component. Degenerate spans raise.
    """

    field_min: float
    field_max: float
    param_min: np.ndarray
    param_max: np.ndarray

    def __post_init__(self):
        if not self.field_max > self.field_min:
            raise ValueError("degenerate field range: max must exceed min")
        self.param_min = np.asarray(self.param_min, dtype=np.float64)
        self.param_max = np.asarray(self.param_max, dtype=np.float64)
        if np.any(self.param_max <= self.param_min):
            raise ValueError("degenerate parameter range: max must exceed min")

    @classmethod
    def from_training_data(cls, fields: np.ndarray, params: np.ndarray) -> "NormStats":
        if params.shape[1]:
            pmin, pmax = params.min(axis=0), params.max(axis=0)
            degenerate = pmax <= pmin
            # a parametric axis can still be constant within one dataset
            pmax = np.where(degenerate, pmin + 1.0, pmax)
        else:
            pmin = np.zeros(0)
            pmax = np.ones(0)
        return cls(float(fields.min()), float(fields.max()), pmin, pmax)

    def normalize_fields(self, fields: np.ndarray) -> np.ndarray:
        return (fields - self.field_min) / (self.field_max - self.field_min)

    def denormalize_fields(self, fields: np.ndarray) -> np.ndarray:
        return fields * (self.field_max - self.field_min) + self.field_min

    def normalize_params(self, params: np.ndarray) -> np.ndarray:
        if params.shape[-1] == 0:
            return params
        return (params - self.param_min) / (self.param_max - self.param_min)

    def to_meta(self) -> dict:
        return {
            "field_min": self.field_min,
            "field_max": self.field_max,
            "param_min": self.param_min.tolist(),
            "param_max": self.param_max.tolist(),
        }

    @classmethod
    def from_meta(cls, meta: dict) -> "NormStats":
        return cls(
            meta["field_min"], meta["field_max"],
            np.asarray(meta["param_min"]), np.asarray(meta["param_max"]),
        )


@dataclass
class TrajectoryDataset:
    fields: np.ndarray            # [N, frames, m, *spatial] float32
    params: np.ndarray            # [N, z] float32
    grid: GridSpec
    tgrid: TimeGrid
    norm: NormStats | None = None
    normalize_fields: bool = False
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.fields = np.asarray(self.fields, dtype=np.float32)
        self.params = np.asarray(self.params, dtype=np.float32)
        expected = (self.tgrid.n_frames,) + (self.fields.shape[2],) + tuple(self.grid.points)
        if self.fields.ndim != 3 + self.grid.ndim or self.fields.shape[1:] != expected:
            raise ValueError(
                f"fields shape {self.fields.shape} inconsistent with grid/time "
                f"(expected [N, {expected[0]}, m, {self.grid.points}])"
            )
        if self.params.ndim != 2 or self.params.shape[0] != self.fields.shape[0]:
            raise ValueError("params must be [N, z] aligned with fields")

    # -- basic views -------------------------------------------------------

    @property
    def n_traj(self) -> int:
        return self.fields.shape[0]

    @property
    def channels(self) -> int:
        return self.fields.shape[2]

    @property
    def z(self) -> int:
        return self.params.shape[1]

    def select(self, indices) -> "TrajectoryDataset":
        indices = np.asarray(indices)
        return replace(
            self,
            fields=self.fields[indices].copy(),
            params=self.params[indices].copy(),
        )

    # -- model-space accessors --------------------------------------------

    def model_fields(self, indices=None) -> np.ndarray:
        """Fields in training space (normalized when configured)."""
        arr = self.fields if indices is None else self.fields[indices]
        arr = arr.astype(np.float64)
        if self.normalize_fields:
            if self.norm is None:
                raise ValueError("dataset configured to normalize but has no stats")
            arr = self.norm.normalize_fields(arr)
        return arr

    def model_params(self, indices=None) -> np.ndarray:
        arr = self.params if indices is None else self.params[indices]
        arr = arr.astype(np.float64)
        if self.norm is not None and self.z:
            arr = self.norm.normalize_params(arr)
        return arr

    def denormalize(self, model_space_fields: np.ndarray) -> np.ndarray:
        if self.normalize_fields:
            return self.norm.denormalize_fields(model_space_fields)
        return model_space_fields

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        meta = {
            "format": "LNPDS1",
            "grid": self.grid.to_meta(),
            "time": self.tgrid.to_meta(),
            "m": self.channels,
            "z": self.z,
            "norm": self.norm.to_meta() if self.norm else None,
            "normalize_fields": self.normalize_fields,
            "provenance": self.provenance,
        }
        write_container(path, MAGIC, meta, {"fields": self.fields, "params": self.params})

    @classmethod
    def load(cls, path) -> "TrajectoryDataset":
        meta, arrays = read_container(path, MAGIC)
        if "fields" not in arrays or "params" not in arrays:
            raise ContainerError(f"{path}: missing fields/params arrays")
        return cls(
            fields=arrays["fields"],
            params=arrays["params"],
            grid=GridSpec.from_meta(meta["grid"]),
            tgrid=TimeGrid.from_meta(meta["time"]),
            norm=NormStats.from_meta(meta["norm"]) if meta.get("norm") else None,
            normalize_fields=bool(meta.get("normalize_fields", False)),
            provenance=meta.get("provenance", {}),
        )


def split_indices(ds: TrajectoryDataset, train, val, test):
    """Split by explicit index collections; overlap or out-of-range raise."""
    groups = [np.asarray(g, dtype=np.int64) for g in (train, val, test)]
    joined = np.concatenate(groups) if groups else np.zeros(0, dtype=np.int64)
    if joined.size and (joined.min() < 0 or joined.max() >= ds.n_traj):
        raise ValueError("split index out of range")
    if np.unique(joined).size != joined.size:
        raise ValueError("split index ranges overlap")
    return tuple(ds.select(g) for g in groups)


def split_counts(ds: TrajectoryDataset, n_train: int, n_val: int, n_test: int,
                 per_param: bool = False):
    """Contiguous count-based split. With per_param=True the counts apply
    within each block of identical parameter rows (parametric sets are
    generated as per-value blocks)."""
    if not per_param:
        total = n_train + n_val + n_test
        if total > ds.n_traj:
            raise ValueError(f"split needs {total} trajectories, dataset has {ds.n_traj}")
        idx = np.arange(ds.n_traj)
        return split_indices(
            ds,
            idx[:n_train],
            idx[n_train : n_train + n_val],
            idx[n_train + n_val : total],
        )

    _, starts = np.unique(ds.params, axis=0, return_index=True)
    boundaries = np.sort(starts).tolist() + [ds.n_traj]
    train_idx, val_idx, test_idx = [], [], []
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        block = np.arange(lo, hi)
        if block.size < n_train + n_val + n_test:
            raise ValueError("parameter block smaller than requested split")
        train_idx.append(block[:n_train])
        val_idx.append(block[n_train : n_train + n_val])
        test_idx.append(block[n_train + n_val : n_train + n_val + n_test])
    return split_indices(
        ds,
        np.concatenate(train_idx),
        np.concatenate(val_idx),
        np.concatenate(test_idx),
    )
