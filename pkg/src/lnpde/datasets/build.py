"""Dataset assembly: sampling ICs, running generators, splitting, stats.

Per-trajectory RNG streams are derived from (seed, global trajectory index),
so results are independent of worker scheduling and reruns with the same
seed are byte-identical on disk.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import NormStats, TrajectoryDataset
from .generators import (
    advection_trajectory,
    burgers_trajectory,
    molenkamp_trajectory,
    sample_molenkamp_params,
    sample_sinusoidal_ic,
)
from .grid import GridSpec, TimeGrid

__all__ = ["GenSpec", "generate", "regenerate_refined", "TruthUnavailableError"]


class TruthUnavailableError(RuntimeError):
    """No generator provenance: refined ground truth cannot be produced."""


@dataclass
class GenSpec:
    kind: str                          # advection | burgers | molenkamp
    grid: GridSpec
    tgrid: TimeGrid
    n_train: int
    n_val: int
    n_test: int
    seed: int = 0
    fixed_value: float | None = None   # zeta / nu for fixed-parameter sets
    train_values: tuple | None = None  # parametric sweeps
    test_values: tuple | None = None
    n_waves: int = 3
    max_wavenumber: int = 8
    oversample: int = 8
    normalize_fields: bool = False

    def __post_init__(self):
        if self.kind not in ("advection", "burgers", "molenkamp"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        parametric = self.train_values is not None
        if parametric and self.kind == "molenkamp":
            raise ValueError("molenkamp parameters are sampled, not enumerated")
        if not parametric and self.kind != "molenkamp" and self.fixed_value is None:
            raise ValueError("fixed-parameter sets need fixed_value")


def _param_names(kind: str, parametric: bool) -> list[str]:
    if kind == "molenkamp":
        return [f"lam{i}" for i in range(1, 6)]
    if not parametric:
        return []
    return ["zeta"] if kind == "advection" else ["nu"]


def _one_trajectory(spec: GenSpec, index: int, value) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(index,)))
    if spec.kind == "molenkamp":
        lam = sample_molenkamp_params(rng)
        traj = molenkamp_trajectory(spec.grid, spec.tgrid, lam)
        return traj, lam
    ic = sample_sinusoidal_ic(spec.grid, rng, spec.n_waves, spec.max_wavenumber)
    if spec.kind == "advection":
        traj = advection_trajectory(spec.grid, spec.tgrid, value, ic)
    else:
        traj = burgers_trajectory(spec.grid, spec.tgrid, value, ic,
                                  oversample=spec.oversample)
    return traj, np.asarray([] if spec.train_values is None else [value])


def _run_block(spec: GenSpec, jobs, workers: int):
    """jobs: list of (global_index, value) pairs; returns fields, params."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda j: _one_trajectory(spec, *j), jobs))
    else:
        results = [_one_trajectory(spec, *j) for j in jobs]
    fields = np.stack([r[0] for r in results])[:, :, None]  # add channel axis
    params = np.stack([r[1] for r in results]) if results[0][1].size else \
        np.zeros((len(results), 0))
    return fields.astype(np.float32), params.astype(np.float32)


def generate(spec: GenSpec, workers: int = 1):
    """Build (train, val, test) datasets. Parametric sweeps emit
    n_train+n_val trajectories per training value and n_test per held-out
    test value; fixed/molenkamp sets use the counts directly."""
    parametric = spec.train_values is not None
    provenance = {
        "generator": spec.kind,
        "seed": spec.seed,
        "n_waves": spec.n_waves,
        "max_wavenumber": spec.max_wavenumber,
        "oversample": spec.oversample,
        "fixed_value": spec.fixed_value,
        "train_values": list(spec.train_values) if parametric else None,
        "test_values": list(spec.test_values) if spec.test_values else None,
        "param_names": _param_names(spec.kind, parametric),
    }

    counter = 0

    def block(n, value):
        nonlocal counter
        jobs = [(counter + i, value) for i in range(n)]
        counter += n
        return _run_block(spec, jobs, workers)

    if not parametric:
        value = spec.fixed_value
        tr_f, tr_p = block(spec.n_train, value)
        va_f, va_p = block(spec.n_val, value)
        te_f, te_p = block(spec.n_test, value)
    else:
        tr_parts, va_parts = [], []
        for value in spec.train_values:
            f, p = block(spec.n_train + spec.n_val, value)
            tr_parts.append((f[: spec.n_train], p[: spec.n_train]))
            va_parts.append((f[spec.n_train :], p[spec.n_train :]))
        te_parts = [block(spec.n_test, value) for value in (spec.test_values or ())]
        tr_f = np.concatenate([x[0] for x in tr_parts])
        tr_p = np.concatenate([x[1] for x in tr_parts])
        va_f = np.concatenate([x[0] for x in va_parts])
        va_p = np.concatenate([x[1] for x in va_parts])
        te_f = np.concatenate([x[0] for x in te_parts])
        te_p = np.concatenate([x[1] for x in te_parts])

    stats = NormStats.from_training_data(tr_f, tr_p)

    def make(f, p):
        return TrajectoryDataset(
            fields=f, params=p, grid=spec.grid, tgrid=spec.tgrid,
            norm=stats, normalize_fields=spec.normalize_fields,
            provenance=provenance,
        )

    return make(tr_f, tr_p), make(va_f, va_p), make(te_f, te_p)


def regenerate_refined(ds: TrajectoryDataset, factor: int) -> np.ndarray:
    """Ground truth on the time grid refined by `factor`, regenerated from
    each trajectory's stored IC/parameters. Shape [N, factor*F+1, m, ...]."""
    gen = ds.provenance.get("generator")
    if gen not in ("advection", "burgers", "molenkamp"):
        raise TruthUnavailableError(
            "dataset has no generator provenance; refined ground truth is "
            "unavailable for imported data"
        )
    tg = ds.tgrid.refined(factor)
    out = np.empty((ds.n_traj, tg.n_frames, ds.channels) + tuple(ds.grid.points))
    names = ds.provenance.get("param_names") or []
    for n in range(ds.n_traj):
        if gen == "molenkamp":
            out[n, :, 0] = molenkamp_trajectory(ds.grid, tg, ds.params[n].astype(np.float64))
            continue
        ic = ds.fields[n, 0, 0].astype(np.float64)
        if names:
            value = float(ds.params[n, 0])
        else:
            value = float(ds.provenance["fixed_value"])
        if gen == "advection":
            out[n, :, 0] = advection_trajectory(ds.grid, tg, value, ic)
        else:
            out[n, :, 0] = burgers_trajectory(
                ds.grid, tg, value, ic, oversample=int(ds.provenance.get("oversample", 8))
            )
    return out
