"""Loss terms for latent dynamics training.

All trajectory batches use a frame-major layout: a batch of B trajectories
with F+1 stored times becomes a single stack of (F+1)*B rows where rows
[i*B, (i+1)*B) hold frame i.  Encoding the whole stack once gives every
loss term access to the true latents through `ops.narrow` slices of one
graph-connected tensor, so encoder gradients flow from prediction targets
and denominators as well as from chain starts.

Relative errors are plain means over all (frame, sample) terms; the
composed training loss applies the per-term weights and the (F+1)/F
factor that converts the mean reconstruction error into the normalized
sum it stands for.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import Tensor, no_grad, ops
from ..model import DivergenceError

__all__ = [
    "ZeroNormError",
    "frame_major",
    "frame_norms",
    "encode_frames",
    "latent_frame",
    "loss_recon",
    "loss_tf",
    "loss_ar",
    "loss_timegen",
    "loss_reg",
    "total_train_loss",
    "rollout_field_error",
    "validation_loss",
]


class ZeroNormError(ValueError):
    """A target frame has zero norm, so its relative error is undefined."""


def frame_major(fields: np.ndarray) -> np.ndarray:
    """[B, F+1, m, *spatial] -> contiguous [(F+1)*B, m, *spatial]."""
    if fields.ndim < 3:
        raise ValueError("expected fields shaped [B, F+1, channels, *spatial]")
    fm = np.swapaxes(fields, 0, 1)
    return np.ascontiguousarray(fm).reshape((-1,) + fields.shape[2:])


def frame_norms(fields_fm: np.ndarray) -> np.ndarray:
    """Per-row L2 norm over the field axes; zero rows are an error."""
    axes = tuple(range(1, fields_fm.ndim))
    norms = np.sqrt(np.sum(fields_fm * fields_fm, axis=axes))
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ZeroNormError(
            f"target frame at stacked row {bad} has zero norm; "
            "relative reconstruction error is undefined for it"
        )
    return norms


def encode_frames(model, fields: np.ndarray) -> tuple[Tensor, int, int]:
    """Encode every frame of a trajectory batch in one pass.

    Returns (latents [(F+1)*B, latent], B, F).
    """
    B, n_frames = fields.shape[0], fields.shape[1]
    if n_frames < 2:
        raise ValueError("need at least two frames per trajectory")
    fm = frame_major(np.asarray(fields, dtype=model.dtype))
    return model.encode(Tensor(fm)), B, n_frames - 1


def latent_frame(lat_all: Tensor, i: int, B: int) -> Tensor:
    """Rows of frame i from the frame-major latent stack."""
    return ops.narrow(lat_all, 0, i * B, B)


def _mean_relative(pred: Tensor, target: Tensor) -> Tensor:
    axes = tuple(range(1, target.ndim))
    num = ops.l2_norm(ops.sub(pred, target), axis=axes)
    den = ops.l2_norm(target, axis=axes)
    return ops.mean(ops.div(num, den))


def loss_recon(model, lat_all: Tensor, fields_fm: np.ndarray) -> Tensor:
    """Mean over frames and samples of |s - dec(enc(s))|_2 / |s|_2."""
    norms = frame_norms(fields_fm)
    dec = model.decode(lat_all)
    axes = tuple(range(1, dec.ndim))
    num = ops.l2_norm(ops.sub(dec, Tensor(fields_fm)), axis=axes)
    return ops.mean(ops.div(num, Tensor(norms)))


def _mu_stack(mu: np.ndarray, groups: int, dtype) -> Tensor:
    return Tensor(np.tile(np.asarray(mu, dtype=dtype), (groups, 1)))


def _chain_terms(model, lat_all, mu, dt, k, B, F, start_mode, guard):
    """Latent chain predictions for every index i in [1, F].

    Each index i is predicted by integrating k steps (fewer near the start
    of the trajectory) from a window-start state.  In "true" mode the
    starts are the encoded latents of frames i-k; in "rollout" mode they
    are gradient-stopped states of a full autoregressive rollout from
    frame 0.  Indices i <= k share one graph-connected chain from frame 0
    in both modes, which makes the two modes produce identical values and
    gradients when k spans the whole trajectory.
    """
    if not 1 <= k:
        raise ValueError("window length k must be >= 1")
    f = model.dynamics
    mu_t = Tensor(np.asarray(mu, dtype=model.dtype))
    terms = []
    ke = min(k, F)
    state = latent_frame(lat_all, 0, B)
    for _ in range(ke):
        state = model.step(state, mu_t, dt)
        peak = float(np.max(np.abs(state.data))) if state.size else 0.0
        if peak > guard:
            raise DivergenceError(len(terms) + 1, peak, guard)
        terms.append(state)
    if F > k:
        G = F - k
        if start_mode == "true":
            starts = ops.narrow(lat_all, 0, B, G * B)
        elif start_mode == "rollout":
            with no_grad():
                rolled = model.rollout(
                    latent_frame(lat_all, 0, B), mu_t, [dt] * G, guard=guard
                )
            starts = Tensor(np.concatenate([s.data for s in rolled[1:]], axis=0))
        else:
            raise ValueError(f"unknown start_mode {start_mode!r}")
        mu_g = _mu_stack(mu, G, model.dtype)
        state = starts
        for _ in range(k):
            state = model.step(state, mu_g, dt)
        terms.append(state)
    return ops.concat(terms, axis=0) if len(terms) > 1 else terms[0]


def loss_tf(model, lat_all, mu, dt, k1, B, F, guard=1e6) -> Tensor:
    """Teacher-forced latent prediction error with window length k1.

    Index i is predicted from the true latent of frame max(i-k1, 0).
    """
    pred = _chain_terms(model, lat_all, mu, dt, k1, B, F, "true", guard)
    target = ops.narrow(lat_all, 0, B, F * B)
    return _mean_relative(pred, target)


def loss_ar(model, lat_all, mu, dt, k2, B, F, guard=1e6) -> Tensor:
    """Autoregressive latent prediction error with window length k2.

    The full rollout from frame 0 is recomputed without gradients; each
    index i is then re-integrated over the last min(i, k2) steps so the
    backward cost stays O(F*k2) while the forward values reproduce the
    rollout exactly.
    """
    pred = _chain_terms(model, lat_all, mu, dt, k2, B, F, "rollout", guard)
    target = ops.narrow(lat_all, 0, B, F * B)
    return _mean_relative(pred, target)


def loss_timegen(model, lat_all, mu, dt, deltas, B, F) -> Tensor:
    """Time-generalization error: each interval is crossed in two steps of
    sizes d and dt-d with d drawn per (trajectory, interval)."""
    deltas = np.asarray(deltas, dtype=model.dtype)
    if deltas.shape != (B, F):
        raise ValueError(f"deltas must have shape ({B}, {F}), got {deltas.shape}")
    starts = ops.narrow(lat_all, 0, 0, F * B)
    target = ops.narrow(lat_all, 0, B, F * B)
    d1 = np.ascontiguousarray(deltas.T).reshape(F * B, 1)
    mu_t = _mu_stack(mu, F, model.dtype)
    mid = model.step(starts, mu_t, Tensor(d1))
    pred = model.step(mid, mu_t, Tensor(dt - d1))
    return _mean_relative(pred, target)


def loss_reg(lat_all: Tensor, latent_dim: int, n_frames: int) -> Tensor:
    """Sum over frames of the batch-mean L1 latent norm, per latent unit."""
    per_row = ops.l1_norm(lat_all, axis=(1,))
    return ops.scale(ops.mean(per_row), n_frames / latent_dim)


def total_train_loss(model, fields, mu, dt, weights, deltas=None, guard=1e6):
    """Composed training loss for one batch.

    Returns (loss Tensor, parts dict).  The parts dict holds the raw
    (unweighted) term values plus the composed total under "ltr" and the
    largest across-row latent variance under "latent_var" for collapse
    detection.  Terms with zero weight are skipped entirely.
    """
    lat_all, B, F = encode_frames(model, fields)
    fm = frame_major(np.asarray(fields, dtype=model.dtype))
    parts = {"l1": 0.0, "l2t": 0.0, "l2a": 0.0, "l3": 0.0, "lrg": 0.0}

    l1 = loss_recon(model, lat_all, fm)
    parts["l1"] = l1.item()
    total = ops.scale(l1, weights.alpha * (F + 1) / F)

    if weights.beta != 0.0:
        l2t = loss_tf(model, lat_all, mu, dt, weights.k1, B, F, guard)
        parts["l2t"] = l2t.item()
        total = ops.add(total, ops.scale(l2t, weights.beta))
    if weights.gamma != 0.0:
        l2a = loss_ar(model, lat_all, mu, dt, weights.k2, B, F, guard)
        parts["l2a"] = l2a.item()
        total = ops.add(total, ops.scale(l2a, weights.gamma))
    if weights.delta != 0.0:
        if deltas is None:
            raise ValueError("time-generalization loss needs substep draws")
        l3 = loss_timegen(model, lat_all, mu, dt, deltas, B, F)
        parts["l3"] = l3.item()
        total = ops.add(total, ops.scale(l3, weights.delta))
    if weights.lambda_rg != 0.0:
        lrg = loss_reg(lat_all, model.encoder.config.latent, F + 1)
        parts["lrg"] = lrg.item()
        total = ops.add(total, ops.scale(lrg, weights.lambda_rg))

    parts["ltr"] = total.item()
    parts["latent_var"] = float(np.max(np.var(lat_all.data, axis=0)))
    return total, parts


def rollout_field_error(model, fields, mu, dt, guard=1e6) -> float:
    """Mean over trajectories of the time-summed relative field error of a
    full autoregressive rollout decoded back to field space."""
    fields = np.asarray(fields, dtype=model.dtype)
    B, F = fields.shape[0], fields.shape[1] - 1
    preds = model.predict_fields(fields[:, 0], mu, [dt] * F, guard=guard)
    axes = tuple(range(2, fields.ndim))
    diff = np.sqrt(np.sum((fields - preds) ** 2, axis=axes))
    norm = np.sqrt(np.sum(fields * fields, axis=axes))
    if np.any(norm[:, 1:] == 0.0):
        raise ZeroNormError("zero-norm target frame in rollout error")
    rel = diff[:, 1:] / norm[:, 1:]
    return float(np.mean(np.sum(rel, axis=1)))


def validation_loss(model, fields, mu, dt, weights, deltas=None, guard=1e6,
                    batch_size=None):
    """Training loss evaluated without gradients plus the time-summed
    relative error of full decoded rollouts, averaged over trajectories."""
    fields = np.asarray(fields, dtype=model.dtype)
    N = fields.shape[0]
    bs = N if batch_size is None else min(batch_size, N)
    ltr_sum = 0.0
    roll_sum = 0.0
    parts_sum = {"l1": 0.0, "l2t": 0.0, "l2a": 0.0, "l3": 0.0, "lrg": 0.0}
    with no_grad():
        for lo in range(0, N, bs):
            hi = min(lo + bs, N)
            fb = fields[lo:hi]
            db = None if deltas is None else deltas[lo:hi]
            _, parts = total_train_loss(model, fb, mu[lo:hi], dt, weights,
                                        deltas=db, guard=guard)
            w = (hi - lo) / N
            ltr_sum += parts["ltr"] * w
            for key in parts_sum:
                parts_sum[key] += parts[key] * w
            roll_sum += rollout_field_error(model, fb, mu[lo:hi], dt, guard) * w
    parts_sum["ltr"] = ltr_sum
    parts_sum["rollout"] = roll_sum
    parts_sum["lvl"] = ltr_sum + roll_sum
    return parts_sum["lvl"], parts_sum
