"""Named run presets: dataset, model, and plan defaults.

Each preset is a plain nested dict with "gen", "model", and "plan"
sections so it can round-trip through JSON config files; command-line
flags override individual values.  The *-fixed / *-param / molenkamp
presets carry the full-scale hyperparameters; the *-desk variants are
scaled down to run end-to-end on a laptop CPU in minutes.  "import" is a
placeholder for externally produced datasets: nothing can be generated
for it, and refined-time evaluation is unavailable.

Decoder filter lists name the input channels of each transposed
convolution (the final layer maps filters[-1] to the field channels), so
a published output-channel listing [c1..cn, m] translates to
filters=[c1, c1..cn] here.
"""

from __future__ import annotations

import copy

import numpy as np

from .datasets import GenSpec, GridSpec, TimeGrid
from .model import SurrogateModel
from .training import TrainPlan

__all__ = [
    "PRESETS",
    "preset_names",
    "get_preset",
    "gen_spec_from_config",
    "model_from_config",
    "plan_from_config",
]

_GRID_1D = {"points": [256], "bounds": [[0.0, 1.0]], "periodic": True}
_TIME_41 = {"t0": 0.0, "dt": 0.05, "steps": 40}

PRESETS: dict[str, dict] = {
    "advection-fixed": {
        "gen": {
            "kind": "advection", **_GRID_1D, **_TIME_41,
            "n_train": 8000, "n_val": 1000, "n_test": 1000,
            "fixed_value": 0.7, "normalize_fields": True, "seed": 0,
        },
        "model": {
            "latent": 30,
            "encoder_filters": [8, 16, 32, 64, 64, 64, 64],
            "encoder_kernels": [5, 5, 5, 5, 5, 5, 5],
            "decoder_filters": [64, 64, 64, 64, 64, 32, 16],
            "decoder_kernels": [6, 6, 6, 6, 6, 6, 5],
            "hidden": [50, 50],
            "stage": 4,
            "seed": 0,
        },
        "plan": {
            "strategy": 1, "lr0": 0.001, "gamma_lr": 0.997, "batch_size": 16,
            "lambda_rg": 0.0, "max_epochs": 5000, "patience": 200, "seed": 0,
        },
    },
    "burgers-fixed": {
        "gen": {
            "kind": "burgers", **_GRID_1D, **_TIME_41,
            "n_train": 8000, "n_val": 1000, "n_test": 1000,
            "fixed_value": 0.1, "normalize_fields": True, "seed": 0,
        },
        "model": {
            "latent": 30,
            "encoder_filters": [8, 16, 32, 32, 32, 32, 32],
            "encoder_kernels": [5, 5, 3, 3, 3, 3, 3],
            "decoder_filters": [32, 32, 32, 32, 32, 32, 16, 1],
            "decoder_kernels": [4, 4, 4, 4, 4, 4, 3, 3],
            "decoder_doublings": 6,
            "hidden": [200, 200, 200, 200],
            "stage": 4,
            "seed": 0,
        },
        "plan": {
            "strategy": 1, "lr0": 0.0014, "gamma_lr": 0.999, "batch_size": 32,
            "lambda_rg": 0.001, "max_epochs": 5000, "patience": 200, "seed": 0,
        },
    },
    "advection-param": {
        "gen": {
            "kind": "advection", **_GRID_1D, **_TIME_41,
            "n_train": 8000, "n_val": 1000, "n_test": 1000,
            "train_values": [0.2, 0.4, 0.7, 2.0, 4.0],
            "test_values": [0.1, 1.0, 7.0],
            "normalize_fields": True, "seed": 0,
        },
        "model": {
            "latent": 30,
            "encoder_filters": [8, 16, 32, 32, 32, 32, 32],
            "encoder_kernels": [5, 5, 3, 3, 3, 3, 3],
            "decoder_filters": [32, 32, 32, 32, 32, 32, 16],
            "decoder_kernels": [4, 4, 4, 4, 4, 4, 3],
            "hidden": [200, 200, 200, 200],
            "stage": 4,
            "seed": 0,
        },
        "plan": {
            "strategy": 2, "gamma0": 1.0 / 500.0, "lr0": 0.0018,
            "gamma_lr": 0.995, "batch_size": 64, "lambda_rg": 0.0,
            "max_epochs": 5000, "patience": 200, "seed": 0,
        },
    },
    "burgers-param": {
        "gen": {
            "kind": "burgers", **_GRID_1D, **_TIME_41,
            "n_train": 8000, "n_val": 1000, "n_test": 1000,
            "train_values": [0.002, 0.004, 0.02, 0.04, 0.2, 0.4, 2.0],
            "test_values": [0.001, 0.01, 0.1, 1.0, 4.0],
            "normalize_fields": True, "seed": 0,
        },
        "model": {
            "latent": 30,
            "encoder_filters": [8, 32, 32, 32, 32, 32, 32],
            "encoder_kernels": [5, 5, 3, 3, 3, 3, 3],
            "decoder_filters": [32, 32, 32, 32, 32, 32, 16, 1],
            "decoder_kernels": [4, 4, 4, 4, 4, 4, 3, 3],
            "decoder_doublings": 6,
            "hidden": [200, 200, 200, 200],
            "stage": 4,
            "seed": 0,
        },
        "plan": {
            "strategy": 2, "gamma0": 1.0 / 1000.0, "lr0": 0.0018,
            "gamma_lr": 0.995, "batch_size": 124, "lambda_rg": 0.0,
            "max_epochs": 5000, "patience": 200, "seed": 0,
        },
    },
    "molenkamp": {
        "gen": {
            "kind": "molenkamp",
            "points": [128, 128], "bounds": [[-1.0, 1.0], [-1.0, 1.0]],
            "periodic": True, "t0": 0.0, "dt": 0.05, "steps": 20,
            "n_train": 5000, "n_val": 200, "n_test": 100,
            "normalize_fields": True, "seed": 0,
        },
        "model": {
            "latent": 50,
            "encoder_filters": [8, 16, 32, 32, 32, 32, 32],
            "encoder_kernels": [5, 5, 3, 3, 3, 3, 3],
            "decoder_filters": [32, 32, 32, 32, 32, 32, 16, 1],
            "decoder_kernels": [4, 4, 4, 4, 4, 4, 3, 3],
            "decoder_doublings": 6,
            "hidden": [100, 100],
            "encoder_final_gelu": True,
            "decoder_first_gelu": True,
            "stage": 4,
            "seed": 0,
        },
        "plan": {
            "strategy": 2, "gamma0": 1.0 / 500.0, "lr0": 0.0015,
            "gamma_lr": 0.995, "batch_size": 16, "lambda_rg": 0.0,
            "max_epochs": 5000, "patience": 200, "seed": 0,
        },
    },
    "advection-desk": {
        "gen": {
            "kind": "advection",
            "points": [64], "bounds": [[0.0, 1.0]], "periodic": True,
            "t0": 0.0, "dt": 0.05, "steps": 20,
            "n_train": 512, "n_val": 64, "n_test": 64,
            "n_waves": 2, "max_wavenumber": 4,
            "fixed_value": 0.7, "normalize_fields": True, "seed": 0,
        },
        "model": {
            "latent": 16,
            "encoder_filters": [8, 16, 32, 32, 32],
            "encoder_kernels": [5, 5, 5, 5, 5],
            "decoder_filters": [32, 32, 16, 16],
            "decoder_kernels": [6, 6, 6, 5],
            "decoder_doublings": 4,
            "hidden": [50, 50],
            "stage": 4,
            "seed": 0,
        },
        "plan": {
            "strategy": 1, "lr0": 0.005, "gamma_lr": 0.985, "batch_size": 16,
            "dynamics_off_epochs": 25, "lambda_rg": 0.0,
            "max_epochs": 180, "patience": 200, "seed": 0,
        },
    },
    "burgers-desk": {
        "gen": {
            "kind": "burgers",
            "points": [64], "bounds": [[0.0, 1.0]], "periodic": True,
            "t0": 0.0, "dt": 0.05, "steps": 20,
            "n_train": 128, "n_val": 32, "n_test": 32,
            "fixed_value": 0.1, "normalize_fields": True, "seed": 0,
        },
        "model": {
            "latent": 16,
            "encoder_filters": [8, 16, 32, 32, 32],
            "encoder_kernels": [5, 5, 5, 5, 5],
            "decoder_filters": [32, 32, 16, 16],
            "decoder_kernels": [6, 6, 6, 5],
            "decoder_doublings": 4,
            "hidden": [50, 50],
            "stage": 4,
            "seed": 0,
        },
        "plan": {
            "strategy": 1, "lr0": 0.002, "gamma_lr": 0.99, "batch_size": 16,
            "lambda_rg": 0.0, "max_epochs": 40, "patience": 200, "seed": 0,
        },
    },
    "molenkamp-desk": {
        "gen": {
            "kind": "molenkamp",
            "points": [32, 32], "bounds": [[-1.0, 1.0], [-1.0, 1.0]],
            "periodic": True, "t0": 0.0, "dt": 0.1, "steps": 10,
            "n_train": 64, "n_val": 16, "n_test": 16,
            "normalize_fields": True, "seed": 0,
        },
        "model": {
            "latent": 16,
            "encoder_filters": [8, 16, 32, 32],
            "encoder_kernels": [5, 5, 3, 3],
            "decoder_filters": [32, 16, 16],
            "decoder_kernels": [4, 4, 3],
            "decoder_doublings": 3,
            "hidden": [64, 64],
            "encoder_final_gelu": True,
            "decoder_first_gelu": True,
            "stage": 4,
            "seed": 0,
        },
        "plan": {
            "strategy": 2, "gamma0": 1.0 / 50.0, "lr0": 0.0015,
            "gamma_lr": 0.995, "batch_size": 16, "lambda_rg": 0.0,
            "max_epochs": 60, "patience": 200, "seed": 0,
        },
    },
    "import": {
        "gen": None,
        "model": {
            "latent": 16,
            "encoder_filters": [8, 16, 32, 32, 32],
            "encoder_kernels": [5, 5, 5, 5, 5],
            "decoder_filters": [32, 32, 16, 16],
            "decoder_kernels": [6, 6, 6, 5],
            "decoder_doublings": 4,
            "hidden": [50, 50],
            "stage": 4,
            "seed": 0,
        },
        "plan": {
            "strategy": 1, "lr0": 0.001, "gamma_lr": 0.997, "batch_size": 16,
            "lambda_rg": 0.0, "max_epochs": 5000, "patience": 200, "seed": 0,
        },
    },
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return copy.deepcopy(PRESETS[name])


def gen_spec_from_config(gen: dict) -> GenSpec:
    if gen is None:
        raise ValueError("this preset has no generator (imported data only)")
    grid = GridSpec(
        points=tuple(int(p) for p in gen["points"]),
        bounds=tuple((float(lo), float(hi)) for lo, hi in gen["bounds"]),
        periodic=bool(gen.get("periodic", True)),
    )
    tgrid = TimeGrid(t0=float(gen.get("t0", 0.0)), dt=float(gen["dt"]),
                     steps=int(gen["steps"]))
    return GenSpec(
        kind=gen["kind"], grid=grid, tgrid=tgrid,
        n_train=int(gen["n_train"]), n_val=int(gen["n_val"]),
        n_test=int(gen["n_test"]), seed=int(gen.get("seed", 0)),
        fixed_value=gen.get("fixed_value"),
        train_values=tuple(gen["train_values"]) if gen.get("train_values") else None,
        test_values=tuple(gen["test_values"]) if gen.get("test_values") else None,
        n_waves=int(gen.get("n_waves", 3)),
        max_wavenumber=int(gen.get("max_wavenumber", 8)),
        oversample=int(gen.get("oversample", 8)),
        normalize_fields=bool(gen.get("normalize_fields", False)),
    )


def model_from_config(model_cfg: dict, ds) -> SurrogateModel:
    """Build the surrogate for a dataset; field shape and parameter count
    come from the data, everything else from the config."""
    extent = tuple(ds.grid.points)
    return SurrogateModel.build(
        channels=ds.channels,
        extent=extent[0] if len(extent) == 1 else extent,
        latent=int(model_cfg["latent"]),
        z=ds.z,
        encoder_filters=list(model_cfg["encoder_filters"]),
        encoder_kernels=list(model_cfg["encoder_kernels"]),
        decoder_filters=list(model_cfg["decoder_filters"]),
        decoder_kernels=list(model_cfg["decoder_kernels"]),
        decoder_doublings=model_cfg.get("decoder_doublings"),
        hidden=list(model_cfg["hidden"]),
        conditioning=model_cfg.get("conditioning"),
        stage=int(model_cfg.get("stage", 4)),
        bias_free_encoder=bool(model_cfg.get("bias_free_encoder", False)),
        encoder_final_gelu=bool(model_cfg.get("encoder_final_gelu", False)),
        decoder_first_gelu=bool(model_cfg.get("decoder_first_gelu", False)),
        seed=int(model_cfg.get("seed", 0)),
        dtype=np.dtype(model_cfg.get("dtype", "float64")).type,
    )


def plan_from_config(plan_cfg: dict) -> TrainPlan:
    known = {f for f in TrainPlan.__dataclass_fields__}
    unknown = set(plan_cfg) - known
    if unknown:
        raise ValueError(f"unknown plan settings: {sorted(unknown)}")
    return TrainPlan(**plan_cfg)
