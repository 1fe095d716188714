"""Rollout error metric against a brute-force reference implementation."""

import numpy as np
import pytest

from lnpde.evaluation import NrmseResult, ZERO_NORM_FLOOR, nrmse, relative_error_field
from lnpde.training import ZeroNormError


def _rand(shape, seed):
    return np.random.default_rng(seed).normal(size=shape)


def _brute_force(pred, true):
    """Triple loop over trajectory, time, and field entries."""
    N, frames = true.shape[:2]
    cells = np.empty((N, frames - 1))
    for n in range(N):
        for j in range(1, frames):
            num = 0.0
            den = 0.0
            for p, t in zip(pred[n, j].ravel(), true[n, j].ravel()):
                num += (p - t) ** 2
                den += t * t
            cells[n, j - 1] = np.sqrt(num) / np.sqrt(den)
    return cells


def test_nrmse_matches_brute_force():
    pred = _rand((3, 5, 2, 7), 0)
    true = _rand((3, 5, 2, 7), 1)
    res = nrmse(pred, true)
    cells = _brute_force(pred, true)
    assert abs(res.overall - cells.mean()) <= 1e-12
    np.testing.assert_allclose(res.cells, cells, rtol=1e-12)
    np.testing.assert_allclose(res.per_time, cells.mean(axis=0), rtol=1e-12)
    np.testing.assert_allclose(res.per_traj, cells.mean(axis=1), rtol=1e-12)
    assert res.excluded == 0


def test_nrmse_2d_fields():
    pred = _rand((2, 3, 1, 4, 5), 2)
    true = _rand((2, 3, 1, 4, 5), 3)
    res = nrmse(pred, true)
    assert abs(res.overall - _brute_force(pred, true).mean()) <= 1e-12


def test_nrmse_doubled_prediction_is_exactly_one():
    true = _rand((4, 6, 1, 8), 4)
    res = nrmse(2.0 * true, true)
    assert res.overall == 1.0
    assert np.all(res.cells == 1.0)


def test_nrmse_scale_invariant():
    pred = _rand((2, 4, 1, 9), 5)
    true = _rand((2, 4, 1, 9), 6)
    a = nrmse(pred, true).overall
    b = nrmse(3.7 * pred, 3.7 * true).overall
    assert a == pytest.approx(b, rel=1e-13)


def test_nrmse_initial_frame_excluded():
    true = _rand((3, 5, 1, 6), 7)
    pred = true.copy()
    pred[:, 0] += 100.0
    assert nrmse(pred, true).overall == 0.0


def test_nrmse_zero_norm_exclusion_and_error():
    true = _rand((2, 4, 1, 6), 8)
    pred = _rand((2, 4, 1, 6), 9)
    true[1, 2] = 0.0
    res = nrmse(pred, true)
    assert res.excluded == 1
    assert np.isnan(res.cells[1, 1])
    finite = res.cells[np.isfinite(res.cells)]
    assert res.overall == pytest.approx(finite.mean(), rel=1e-14)
    # a frame below the floor counts as zero too
    true[1, 2] = ZERO_NORM_FLOOR / 10
    assert nrmse(pred, true).excluded == 1
    with pytest.raises(ZeroNormError, match="zero"):
        nrmse(pred, true, zero_norm="error")


def test_nrmse_all_zero_targets_rejected():
    true = np.zeros((2, 3, 1, 4))
    pred = _rand((2, 3, 1, 4), 10)
    with pytest.raises(ZeroNormError, match="every target frame"):
        nrmse(pred, true)


def test_nrmse_validates_shapes():
    with pytest.raises(ValueError, match="shape mismatch"):
        nrmse(np.zeros((2, 3, 1, 4)), np.zeros((2, 3, 1, 5)))
    with pytest.raises(ValueError, match="F >= 1"):
        nrmse(np.zeros((2, 1, 1, 4)), np.zeros((2, 1, 1, 4)))
    with pytest.raises(ValueError, match="F >= 1"):
        nrmse(np.zeros((2, 3)), np.zeros((2, 3)))


def test_nrmse_result_is_frozen():
    res = nrmse(_rand((2, 3, 1, 4), 11), _rand((2, 3, 1, 4), 12))
    assert isinstance(res, NrmseResult)
    with pytest.raises(AttributeError):
        res.overall = 0.0


def test_relative_error_field_norm_identity():
    """The L2 norm of the pointwise relative error field equals the scalar
    relative L2 error of the frame."""
    pred = _rand((2, 9), 13)
    true = _rand((2, 9), 14)
    field = relative_error_field(pred, true)
    scalar = np.linalg.norm(pred - true) / np.linalg.norm(true)
    assert np.linalg.norm(field) == pytest.approx(scalar, rel=1e-14)
    np.testing.assert_allclose(field, np.abs(pred - true) / np.linalg.norm(true))


def test_relative_error_field_validation():
    with pytest.raises(ValueError, match="shape mismatch"):
        relative_error_field(np.zeros((2, 3)), np.zeros((3, 2)))
    with pytest.raises(ZeroNormError):
        relative_error_field(np.ones((2, 2)), np.zeros((2, 2)))
