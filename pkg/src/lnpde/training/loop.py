"""Epoch loop: minibatched optimization, validation, logging, checkpoints.

Every source of randomness is reseeded per epoch from (seed, purpose,
epoch), so a run can be stopped and resumed at any epoch boundary and
reproduce the uninterrupted run exactly.  The CSV log uses a fixed header
and fixed float formatting for the same reason.
"""

from __future__ import annotations

import logging
import time
from pathlib import Path

import numpy as np

from ..autodiff import NonFiniteError
from ..model import DivergenceError, load_checkpoint, save_checkpoint
from .losses import total_train_loss, validation_loss
from .optimizer import Adam, NanGradientError
from .plan import TrainPlan

__all__ = ["train", "CSV_HEADER"]

logger = logging.getLogger("lnpde.training")

CSV_HEADER = "epoch,l1,l2t,l2a,l3,lrg,ltr,lvl,lr,k2,gamma"

_LATENT_VAR_FLOOR = 1e-10


def _epoch_rng(seed: int, purpose: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(purpose, epoch)))


def _fmt_row(epoch, parts, lvl, lr, k2, gamma) -> str:
    vals = [parts["l1"], parts["l2t"], parts["l2a"], parts["l3"],
            parts["lrg"], parts["ltr"], lvl, lr]
    body = ",".join(f"{v:.10e}" for v in vals)
    return f"{epoch},{body},{k2},{gamma:.10e}"


def train(model, train_ds, val_ds, plan: TrainPlan, out_dir, resume: bool = False,
          progress=None) -> dict:
    """Optimize `model` on `train_ds`, tracking the best validation loss.

    Writes `log.csv`, `checkpoint.lnpde` (latest epoch) and `best.lnpde`
    (lowest validation loss) into `out_dir`.  With resume=True, continues
    from the latest checkpoint in `out_dir` and appends to the log.
    Returns a summary dict.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "log.csv"
    ck_path = out / "checkpoint.lnpde"
    best_path = out / "best.lnpde"

    ftr = train_ds.model_fields()
    ptr = train_ds.model_params()
    fvl = val_ds.model_fields()
    pvl = val_ds.model_params()
    dt = train_ds.tgrid.dt
    N = ftr.shape[0]
    F = ftr.shape[1] - 1
    if F < 1:
        raise ValueError("training trajectories need at least two frames")

    opt = Adam(dict(model.named_parameters()))
    start_epoch = 1
    best_vl = float("inf")
    bad_epochs = 0

    if resume:
        if not ck_path.exists():
            raise FileNotFoundError(f"cannot resume: {ck_path} does not exist")
        saved, train_meta, extra = load_checkpoint(ck_path)
        model.load_state_arrays(saved.state_arrays())
        opt.load_state_arrays(extra)
        start_epoch = int(train_meta["epoch"]) + 1
        best_vl = float(train_meta["best_vl"])
        bad_epochs = int(train_meta["bad_epochs"])
        logger.info("resuming from epoch %d (best lvl %.6e)", start_epoch, best_vl)
    elif csv_path.exists():
        csv_path.unlink()

    def checkpoint(path, epoch):
        meta = {"epoch": epoch, "best_vl": best_vl, "bad_epochs": bad_epochs,
                "plan": plan.to_meta()}
        save_checkpoint(path, model, train_meta=meta, extra_arrays=opt.state_arrays())

    write_header = not csv_path.exists()
    stopped = "max_epochs"
    last_epoch = start_epoch - 1
    t0 = time.monotonic()

    with open(csv_path, "a") as csv:
        if write_header:
            csv.write(CSV_HEADER + "\n")
            csv.flush()
        for epoch in range(start_epoch, plan.max_epochs + 1):
            w = plan.resolve(epoch, F)
            perm = _epoch_rng(plan.seed, 1, epoch).permutation(N)
            d_tr = _epoch_rng(plan.seed, 2, epoch).uniform(0.0, dt, size=(N, F))
            d_vl = _epoch_rng(plan.seed, 3, epoch).uniform(0.0, dt, size=(fvl.shape[0], F))

            acc = {"l1": 0.0, "l2t": 0.0, "l2a": 0.0, "l3": 0.0, "lrg": 0.0, "ltr": 0.0}
            seen = 0
            skipped = 0
            collapse_warned = False
            for lo in range(0, N, plan.batch_size):
                idx = perm[lo:lo + plan.batch_size]
                model.zero_grad()
                try:
                    loss, parts = total_train_loss(
                        model, ftr[idx], ptr[idx], dt, w,
                        deltas=d_tr[idx], guard=plan.guard,
                    )
                    loss.backward()
                    opt.step(w.lr)
                except (NonFiniteError, DivergenceError, NanGradientError) as err:
                    skipped += 1
                    model.zero_grad()
                    logger.warning("epoch %d: skipped batch at %d (%s)", epoch, lo, err)
                    continue
                if not collapse_warned and parts["latent_var"] < _LATENT_VAR_FLOOR:
                    collapse_warned = True
                    logger.warning(
                        "epoch %d: latent batch variance %.3e below %.0e; encoder may "
                        "be collapsing to a trivial minimum (consider a bias-free "
                        "encoder or learning-rate warmup)",
                        epoch, parts["latent_var"], _LATENT_VAR_FLOOR,
                    )
                n = len(idx)
                seen += n
                for key in acc:
                    acc[key] += parts[key] * n
            if seen == 0:
                raise RuntimeError(
                    f"epoch {epoch}: every batch failed ({skipped} skipped); aborting"
                )
            for key in acc:
                acc[key] /= seen

            try:
                lvl, _ = validation_loss(
                    model, fvl, pvl, dt, w, deltas=d_vl,
                    guard=plan.guard, batch_size=plan.batch_size,
                )
            except (NonFiniteError, DivergenceError) as err:
                lvl = float("inf")
                logger.warning("epoch %d: validation rollout failed (%s)", epoch, err)

            row = _fmt_row(epoch, acc, lvl, w.lr, w.k2, w.gamma)
            csv.write(row + "\n")
            csv.flush()
            last_epoch = epoch

            if lvl < best_vl:
                best_vl = lvl
                bad_epochs = 0
                checkpoint(best_path, epoch)
            else:
                bad_epochs += 1
            checkpoint(ck_path, epoch)

            if progress is not None:
                progress(epoch, dict(acc, lvl=lvl, lr=w.lr, k2=w.k2,
                                     gamma=w.gamma, skipped=skipped))
            if bad_epochs >= plan.patience:
                stopped = "patience"
                logger.info("early stop at epoch %d: no improvement for %d epochs",
                            epoch, plan.patience)
                break

    return {
        "epochs_run": last_epoch,
        "best_vl": best_vl,
        "stopped": stopped,
        "wall_seconds": time.monotonic() - t0,
        "log_csv": str(csv_path),
        "checkpoint": str(ck_path),
        "best_checkpoint": str(best_path),
    }
