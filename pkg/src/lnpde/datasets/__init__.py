"""Dataset generation, containers, normalization, and splits."""

from .build import GenSpec, TruthUnavailableError, generate, regenerate_refined
from .dataset import NormStats, TrajectoryDataset, split_counts, split_indices
from .generators import (
    CFLError,
    MOLENKAMP_PARAM_RANGES,
    advection_trajectory,
    burgers_trajectory,
    molenkamp_trajectory,
    sample_molenkamp_params,
    sample_sinusoidal_ic,
)
from .grid import GridSpec, TimeGrid

__all__ = [
    "GridSpec",
    "TimeGrid",
    "TrajectoryDataset",
    "NormStats",
    "split_counts",
    "split_indices",
    "GenSpec",
    "generate",
    "regenerate_refined",
    "TruthUnavailableError",
    "CFLError",
    "MOLENKAMP_PARAM_RANGES",
    "sample_sinusoidal_ic",
    "advection_trajectory",
    "burgers_trajectory",
    "molenkamp_trajectory",
    "sample_molenkamp_params",
]
