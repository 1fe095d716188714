"""Shared fixtures: tiny datasets and models sized for fast tests."""

import numpy as np
import pytest

from lnpde.datasets import GenSpec, GridSpec, TimeGrid, generate
from lnpde.model import SurrogateModel


def tiny_gen_spec(**overrides) -> GenSpec:
    """Small fixed-parameter advection problem: 16 points, 6 frames."""
    base = dict(
        kind="advection",
        grid=GridSpec(points=(16,), bounds=((0.0, 1.0),)),
        tgrid=TimeGrid(t0=0.0, dt=0.05, steps=5),
        n_train=8,
        n_val=4,
        n_test=4,
        seed=11,
        fixed_value=0.7,
        n_waves=2,
        max_wavenumber=3,
        normalize_fields=True,
    )
    base.update(overrides)
    return GenSpec(**base)


@pytest.fixture(scope="session")
def tiny_splits():
    return generate(tiny_gen_spec())


@pytest.fixture(scope="session")
def tiny_train(tiny_splits):
    return tiny_splits[0]


@pytest.fixture(scope="session")
def tiny_val(tiny_splits):
    return tiny_splits[1]


def tiny_model(ds, *, latent=3, stage=4, seed=0, dtype=np.float64) -> SurrogateModel:
    extent = tuple(ds.grid.points)
    return SurrogateModel.build(
        channels=ds.channels,
        extent=extent[0] if len(extent) == 1 else extent,
        latent=latent,
        z=ds.z,
        encoder_filters=[4, 8],
        encoder_kernels=[5, 5],
        decoder_filters=[8, 4],
        decoder_kernels=[6, 5],
        hidden=[16],
        stage=stage,
        seed=seed,
        dtype=dtype,
    )


@pytest.fixture()
def fresh_model(tiny_train):
    return tiny_model(tiny_train)
