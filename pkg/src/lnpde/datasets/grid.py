"""Spatial and temporal discretization descriptors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["GridSpec", "TimeGrid"]


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor-product grid.

    points: grid points per axis (1 or 2 axes).
    bounds: (lo, hi) per axis.
    periodic: periodic grids exclude the right endpoint (x_j = lo + j*h with
    h = (hi-lo)/n); non-periodic grids include both endpoints.
    """

    points: tuple[int, ...]
    bounds: tuple[tuple[float, float], ...]
    periodic: bool = True

    def __post_init__(self):
        if len(self.points) not in (1, 2):
            raise ValueError("only 1-D and 2-D grids are supported")
        if len(self.bounds) != len(self.points):
            raise ValueError("points/bounds rank mismatch")
        for n, (lo, hi) in zip(self.points, self.bounds):
            if n < 2:
                raise ValueError(f"need at least 2 points per axis, got {n}")
            if not hi > lo:
                raise ValueError(f"empty axis extent [{lo}, {hi}]")

    @property
    def ndim(self) -> int:
        return len(self.points)

    def extent(self, axis: int = 0) -> float:
        lo, hi = self.bounds[axis]
        return hi - lo

    def spacing(self, axis: int = 0) -> float:
        n = self.points[axis]
        return self.extent(axis) / (n if self.periodic else n - 1)

    def coords(self, axis: int = 0) -> np.ndarray:
        lo, hi = self.bounds[axis]
        n = self.points[axis]
        if self.periodic:
            return lo + self.extent(axis) * np.arange(n) / n
        return np.linspace(lo, hi, n)

    def meshgrid(self):
        return np.meshgrid(*(self.coords(a) for a in range(self.ndim)), indexing="ij")

    def refined(self, factor: int) -> "GridSpec":
        if self.periodic:
            pts = tuple(n * factor for n in self.points)
        else:
            pts = tuple((n - 1) * factor + 1 for n in self.points)
        return GridSpec(pts, self.bounds, self.periodic)

    def to_meta(self) -> dict:
        return {
            "points": list(self.points),
            "bounds": [list(b) for b in self.bounds],
            "periodic": self.periodic,
        }

    @classmethod
    def from_meta(cls, meta: dict) -> "GridSpec":
        return cls(
            tuple(int(p) for p in meta["points"]),
            tuple((float(lo), float(hi)) for lo, hi in meta["bounds"]),
            bool(meta["periodic"]),
        )


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid t_i = t0 + i*dt, i = 0..steps (steps+1 frames)."""

    t0: float
    dt: float
    steps: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")

    @property
    def n_frames(self) -> int:
        return self.steps + 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_frames)

    def refined(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.t0, self.dt / factor, self.steps * factor)

    def to_meta(self) -> dict:
        return {"t0": self.t0, "dt": self.dt, "steps": self.steps}

    @classmethod
    def from_meta(cls, meta: dict) -> "TimeGrid":
        return cls(float(meta["t0"]), float(meta["dt"]), int(meta["steps"]))
