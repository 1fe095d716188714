"""Generator physics oracles, dataset container, splits, normalization."""

import numpy as np
import pytest

from lnpde._binio import ContainerError
from lnpde.datasets import (
    CFLError,
    GenSpec,
    GridSpec,
    NormStats,
    TimeGrid,
    TrajectoryDataset,
    TruthUnavailableError,
    advection_trajectory,
    burgers_trajectory,
    generate,
    molenkamp_trajectory,
    regenerate_refined,
    sample_molenkamp_params,
    sample_sinusoidal_ic,
    split_counts,
    split_indices,
)
from lnpde.datasets.generators import MOLENKAMP_PARAM_RANGES

from conftest import tiny_gen_spec

UNIT_1D = GridSpec(points=(64,), bounds=((0.0, 1.0),))


# ------------------------------------------------------------ initial data


def test_sinusoidal_ic_shape_mean_and_bound():
    rng = np.random.default_rng(0)
    ic = sample_sinusoidal_ic(UNIT_1D, rng, n_waves=3, max_wavenumber=6)
    assert ic.shape == (64,)
    # integer wavenumbers on a periodic grid: zero mean to roundoff
    assert abs(ic.mean()) < 1e-13
    assert np.max(np.abs(ic)) <= 3.0  # at most n_waves unit amplitudes


def test_sinusoidal_ic_rejects_2d_grid():
    g2 = GridSpec(points=(8, 8), bounds=((0.0, 1.0), (0.0, 1.0)))
    with pytest.raises(ValueError):
        sample_sinusoidal_ic(g2, np.random.default_rng(0))


# ------------------------------------------------------------ advection


def test_advection_integer_cell_shift_is_exact():
    # zeta*t equal to 8 cells: the spectral solution is an exact roll
    ic = sample_sinusoidal_ic(UNIT_1D, np.random.default_rng(5), 3, 6)
    tg = TimeGrid(t0=0.0, dt=0.25, steps=1)  # 0.5 * 0.25 = 8/64
    traj = advection_trajectory(UNIT_1D, tg, 0.5, ic)
    np.testing.assert_allclose(traj[1], np.roll(ic, 8), atol=1e-12)
    # frame 0 passes through the FFT roundtrip, roundoff only
    np.testing.assert_allclose(traj[0], ic, atol=1e-13)


def test_advection_pde_residual_second_order():
    # residual of d_t s + zeta d_x s under central differences must shrink
    # at the FD truncation order ~h^2, proving the trajectory solves the PDE
    errs = []
    for n in (64, 128, 256):
        g = GridSpec(points=(n,), bounds=((0.0, 1.0),))
        ic = sample_sinusoidal_ic(g, np.random.default_rng(5), 3, 6)
        h = g.spacing(0)
        tg = TimeGrid(t0=0.2 - h, dt=h, steps=2)
        tr = advection_trajectory(g, tg, 0.7, ic)
        st = (tr[2] - tr[0]) / (2 * h)
        sx = (np.roll(tr[1], -1) - np.roll(tr[1], 1)) / (2 * h)
        errs.append(np.max(np.abs(st + 0.7 * sx)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.9), f"orders {orders}"


def test_advection_requires_periodic_1d_grid():
    open_grid = GridSpec(points=(16,), bounds=((0.0, 1.0),), periodic=False)
    tg = TimeGrid(0.0, 0.1, 2)
    with pytest.raises(ValueError):
        advection_trajectory(open_grid, tg, 1.0, np.zeros(16))
    with pytest.raises(ValueError):
        advection_trajectory(UNIT_1D, tg, 1.0, np.zeros(7))


# ------------------------------------------------------------ Burgers


def test_burgers_conserves_mass():
    # conservative flux form: the spatial mean (= integral / L) may drift
    # only by accumulated roundoff; a mean-shifted IC keeps it nonzero
    ic = sample_sinusoidal_ic(UNIT_1D, np.random.default_rng(7), 3, 5) + 1.5
    tg = TimeGrid(t0=0.0, dt=0.05, steps=10)
    traj = burgers_trajectory(UNIT_1D, tg, 0.1, ic, oversample=8)
    mass = traj.mean(axis=1)
    assert np.max(np.abs(mass - mass[0])) / abs(mass[0]) < 1e-6


def test_burgers_self_converges_under_oversample_doubling():
    ic = sample_sinusoidal_ic(UNIT_1D, np.random.default_rng(7), 3, 5) + 1.5
    tg = TimeGrid(t0=0.0, dt=0.05, steps=10)
    ref = burgers_trajectory(UNIT_1D, tg, 0.1, ic, oversample=8)
    d2 = np.linalg.norm(burgers_trajectory(UNIT_1D, tg, 0.1, ic, oversample=2)[-1] - ref[-1])
    d4 = np.linalg.norm(burgers_trajectory(UNIT_1D, tg, 0.1, ic, oversample=4)[-1] - ref[-1])
    assert d2 / d4 > 1.7, f"convergence ratio {d2 / d4:.2f}"


def test_burgers_pinned_time_oversample_below_cfl_raises():
    ic = sample_sinusoidal_ic(UNIT_1D, np.random.default_rng(3), 3, 5) + 2.0
    tg = TimeGrid(t0=0.0, dt=0.05, steps=2)
    with pytest.raises(CFLError, match="substeps"):
        burgers_trajectory(UNIT_1D, tg, 0.5, ic, oversample=8, time_oversample=1)


def test_burgers_validates_inputs():
    tg = TimeGrid(0.0, 0.05, 1)
    with pytest.raises(ValueError):
        burgers_trajectory(UNIT_1D, tg, 0.1, np.zeros(64), oversample=0)
    open_grid = GridSpec(points=(16,), bounds=((0.0, 1.0),), periodic=False)
    with pytest.raises(ValueError):
        burgers_trajectory(open_grid, tg, 0.1, np.zeros(16))


# ------------------------------------------------------------ Molenkamp


MOLENKAMP_GRID = GridSpec(points=(64, 64), bounds=((-1.0, 1.0), (-1.0, 1.0)),
                          periodic=False)


def test_molenkamp_full_rotation_decay_is_exact():
    # with centered offsets the pulse returns to its start after t=1 and the
    # field equals the initial frame times e^(-lam3)
    lam = np.array([5.0, 3.0, 2.0, 0.0, 0.0])
    tg = TimeGrid(t0=0.0, dt=0.5, steps=2)
    q = molenkamp_trajectory(MOLENKAMP_GRID, tg, lam)
    np.testing.assert_allclose(q[2], q[0] * np.exp(-lam[2]), rtol=0, atol=1e-12)


def test_molenkamp_advection_reaction_residual_second_order():
    # the closed form solves d_t q + u d_x q + v d_y q + lam3 q = 0 along the
    # rigid rotation that carries its center, (u, v) = (2 pi y, -2 pi x);
    # central-difference residuals must vanish at the FD order h^2
    lam = np.array([5.0, 3.0, 2.0, 0.0, 0.0])
    errs = []
    for n in (65, 129, 257):
        g = GridSpec(points=(n, n), bounds=((-1.0, 1.0), (-1.0, 1.0)), periodic=False)
        h = g.spacing(0)
        tg = TimeGrid(t0=0.3 - h, dt=h, steps=2)
        q = molenkamp_trajectory(g, tg, lam)
        qt = (q[2] - q[0]) / (2 * h)
        qx = (q[1][2:, 1:-1] - q[1][:-2, 1:-1]) / (2 * h)
        qy = (q[1][1:-1, 2:] - q[1][1:-1, :-2]) / (2 * h)
        xg, yg = g.meshgrid()
        u = 2 * np.pi * yg[1:-1, 1:-1]
        v = -2 * np.pi * xg[1:-1, 1:-1]
        resid = qt[1:-1, 1:-1] + u * qx + v * qy + lam[2] * q[1][1:-1, 1:-1]
        errs.append(np.max(np.abs(resid)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8), f"orders {orders}"


def test_molenkamp_peak_height_tracks_decay_law():
    # the analytic maximum lam1*e^(-lam3 t) bounds every grid sample and the
    # grid maximum approaches it on center-crossing times
    lam = np.array([10.0, 2.5, 1.5, 0.0, 0.0])
    tg = TimeGrid(t0=0.0, dt=0.25, steps=4)
    q = molenkamp_trajectory(MOLENKAMP_GRID, tg, lam)
    for i, t in enumerate(tg.times):
        analytic = lam[0] * np.exp(-lam[2] * t)
        assert q[i].max() <= analytic + 1e-12
        assert q[i].max() > 0.97 * analytic


def test_molenkamp_param_validation_and_warning():
    tg = TimeGrid(0.0, 0.1, 1)
    with pytest.raises(ValueError):
        molenkamp_trajectory(MOLENKAMP_GRID, tg, np.ones(4))
    with pytest.raises(ValueError):
        molenkamp_trajectory(UNIT_1D, tg, np.ones(5))
    with pytest.warns(UserWarning, match="outside sampled range"):
        molenkamp_trajectory(MOLENKAMP_GRID, tg, np.array([100.0, 3.0, 2.0, 0.0, 0.0]))


def test_sample_molenkamp_params_within_ranges():
    rng = np.random.default_rng(0)
    for _ in range(50):
        lam = sample_molenkamp_params(rng)
        for value, (lo, hi) in zip(lam, MOLENKAMP_PARAM_RANGES):
            assert lo <= value <= hi


# ------------------------------------------------------------ generation


def test_gen_spec_validation():
    with pytest.raises(ValueError, match="unknown generator"):
        tiny_gen_spec(kind="heat")
    with pytest.raises(ValueError, match="fixed_value"):
        tiny_gen_spec(fixed_value=None)
    with pytest.raises(ValueError, match="sampled"):
        GenSpec(
            kind="molenkamp",
            grid=GridSpec(points=(8, 8), bounds=((-1.0, 1.0), (-1.0, 1.0))),
            tgrid=TimeGrid(0.0, 0.1, 2),
            n_train=2, n_val=1, n_test=1,
            train_values=(1.0, 2.0),
        )


def test_generate_shapes_and_split_sizes(tiny_splits):
    train, val, test = tiny_splits
    assert train.fields.shape == (8, 6, 1, 16)
    assert val.n_traj == 4 and test.n_traj == 4
    assert train.fields.dtype == np.float32
    assert train.z == 0  # fixed-parameter set has no parameter columns
    assert train.provenance["generator"] == "advection"


def test_generate_is_deterministic_and_worker_invariant():
    spec = tiny_gen_spec()
    a = generate(spec, workers=1)
    b = generate(spec, workers=3)
    for da, db in zip(a, b):
        np.testing.assert_array_equal(da.fields, db.fields)
        np.testing.assert_array_equal(da.params, db.params)


def test_generate_parametric_sweep_counts_and_columns():
    spec = tiny_gen_spec(
        fixed_value=None,
        train_values=(0.5, 1.0),
        test_values=(2.0,),
        n_train=3,
        n_val=2,
        n_test=4,
    )
    train, val, test = generate(spec)
    assert train.n_traj == 6 and val.n_traj == 4 and test.n_traj == 4
    assert train.z == 1
    np.testing.assert_array_equal(np.unique(train.params), [0.5, 1.0])
    np.testing.assert_array_equal(np.unique(test.params), [2.0])
    assert train.provenance["param_names"] == ["zeta"]


def test_norm_stats_come_from_training_split_only(tiny_splits):
    train, val, test = tiny_splits
    assert train.norm.field_min == float(train.fields.min())
    assert train.norm.field_max == float(train.fields.max())
    # all splits share the training stats
    assert val.norm.field_min == train.norm.field_min
    assert test.norm.field_max == train.norm.field_max


def test_model_fields_normalize_to_unit_interval(tiny_train):
    arr = tiny_train.model_fields()
    assert arr.dtype == np.float64
    assert arr.min() >= 0.0 and arr.max() <= 1.0
    # denormalize undoes the map
    back = tiny_train.denormalize(arr)
    np.testing.assert_allclose(back, tiny_train.fields.astype(np.float64), atol=1e-12)


def test_norm_stats_validation():
    with pytest.raises(ValueError, match="degenerate field range"):
        NormStats(1.0, 1.0, np.zeros(0), np.ones(0))
    with pytest.raises(ValueError, match="degenerate parameter range"):
        NormStats(0.0, 1.0, np.array([2.0]), np.array([2.0]))


def test_constant_parameter_column_does_not_break_stats():
    fields = np.zeros((3, 2, 1, 4), dtype=np.float32)
    fields[0, 0, 0, 0] = 1.0
    params = np.full((3, 1), 7.0, dtype=np.float32)
    stats = NormStats.from_training_data(fields, params)
    np.testing.assert_array_equal(stats.normalize_params(params), np.zeros((3, 1)))


# ------------------------------------------------------------ container


def test_dataset_save_load_roundtrip_is_byte_identical(tiny_train, tmp_path):
    p1, p2 = tmp_path / "a.lnpds", tmp_path / "b.lnpds"
    tiny_train.save(p1)
    loaded = TrajectoryDataset.load(p1)
    np.testing.assert_array_equal(loaded.fields, tiny_train.fields)
    np.testing.assert_array_equal(loaded.params, tiny_train.params)
    assert loaded.grid == tiny_train.grid
    assert loaded.tgrid == tiny_train.tgrid
    assert loaded.normalize_fields == tiny_train.normalize_fields
    assert loaded.provenance == tiny_train.provenance
    loaded.save(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_rejects_wrong_magic(tmp_path):
    bad = tmp_path / "bad.lnpds"
    bad.write_bytes(b"NOTDAT" + b"\x00" * 32)
    with pytest.raises(ContainerError, match="bad magic"):
        TrajectoryDataset.load(bad)


def test_load_rejects_truncated_file(tiny_train, tmp_path):
    p = tmp_path / "t.lnpds"
    tiny_train.save(p)
    blob = p.read_bytes()
    p.write_bytes(blob[: len(blob) - 64])
    with pytest.raises(ContainerError, match="truncated"):
        TrajectoryDataset.load(p)


def test_dataset_shape_consistency_enforced():
    with pytest.raises(ValueError, match="inconsistent"):
        TrajectoryDataset(
            fields=np.zeros((2, 3, 1, 8), dtype=np.float32),
            params=np.zeros((2, 0), dtype=np.float32),
            grid=GridSpec(points=(16,), bounds=((0.0, 1.0),)),
            tgrid=TimeGrid(0.0, 0.1, 2),
        )


# ------------------------------------------------------------ splits


def test_split_indices_rejects_overlap_and_range(tiny_train):
    with pytest.raises(ValueError, match="overlap"):
        split_indices(tiny_train, [0, 1], [1, 2], [3])
    with pytest.raises(ValueError, match="out of range"):
        split_indices(tiny_train, [0], [1], [99])


def test_split_counts_contiguous(tiny_train):
    tr, va, te = split_counts(tiny_train, 4, 2, 2)
    assert (tr.n_traj, va.n_traj, te.n_traj) == (4, 2, 2)
    np.testing.assert_array_equal(tr.fields, tiny_train.fields[:4])
    with pytest.raises(ValueError, match="needs"):
        split_counts(tiny_train, 8, 4, 4)


def test_select_copies_rows(tiny_train):
    sub = tiny_train.select([1, 3])
    assert sub.n_traj == 2
    sub.fields[0] = 0.0
    assert not np.allclose(tiny_train.fields[1], 0.0)


# ------------------------------------------------------------ refined truth


def test_regenerate_refined_matches_stored_frames(tiny_train):
    refined = regenerate_refined(tiny_train, 3)
    assert refined.shape == (8, 16, 1, 16)
    # every 3rd refined frame lands on a stored frame (f32 rounding apart)
    np.testing.assert_allclose(
        refined[:, ::3], tiny_train.fields.astype(np.float64), atol=1e-6
    )
    assert refined.dtype == np.float64


def test_regenerate_refined_requires_provenance(tiny_train):
    stripped = tiny_train.select(np.arange(tiny_train.n_traj))
    stripped.provenance = {}
    with pytest.raises(TruthUnavailableError, match="provenance"):
        regenerate_refined(stripped, 2)
