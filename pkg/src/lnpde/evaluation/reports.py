"""Rollout evaluation reports: time generalization, CSV tables, SVG plots.

A report evaluates full autoregressive rollouts of a trained model against
ground truth, optionally on a time grid refined by an integer factor: the
model steps with dt/factor and is compared against truth regenerated at
the refined times, which probes generalization to time points never seen
in training.  Errors are always computed on denormalized (physical)
fields.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..datasets import regenerate_refined
from .metrics import NrmseResult, nrmse

__all__ = [
    "EvalReport",
    "evaluate_rollout",
    "eval_time_generalization",
    "write_report_cells",
    "write_summary",
    "plot_nrmse_vs_time",
    "report_curves",
]


@dataclass(frozen=True)
class EvalReport:
    """Evaluation of full rollouts at one step size."""

    factor: int
    dt: float                 # step size used for the rollout
    times: np.ndarray         # refined frame times, length factor*F + 1
    result: NrmseResult
    train_time_nrmse: float   # restricted to frames on the training grid
    params: np.ndarray        # [N, z] physical parameters (z may be 0)
    param_names: tuple

    @property
    def nrmse(self) -> float:
        return self.result.overall

    def per_param(self) -> dict[tuple, float]:
        """Mean per-trajectory error grouped by parameter vector."""
        if self.params.shape[1] == 0:
            return {(): float(np.nanmean(self.result.per_traj))}
        out: dict[tuple, list] = {}
        for row, val in zip(self.params, self.result.per_traj):
            out.setdefault(tuple(np.round(row.astype(float), 12)), []).append(val)
        return {k: float(np.nanmean(v)) for k, v in sorted(out.items())}


def evaluate_rollout(model, ds, factor: int = 1, guard: float = 1e6,
                     chunk: int = 16) -> EvalReport:
    """Roll the model out over `ds` with step dt/factor and score it.

    factor=1 scores against the stored fields; factor>1 regenerates truth
    at the refined times from the dataset's provenance.
    """
    if factor < 1:
        raise ValueError("factor must be a positive integer")
    F = ds.tgrid.steps
    if F < 1:
        raise ValueError("dataset must contain at least one time step")
    if factor == 1:
        truth = ds.fields.astype(np.float64)
        tg = ds.tgrid
    else:
        truth = regenerate_refined(ds, factor)
        tg = ds.tgrid.refined(factor)
    dt = ds.tgrid.dt / factor
    s0 = ds.model_fields()[:, 0]
    mu = ds.model_params()
    preds = np.empty(truth.shape, dtype=np.float64)
    for lo in range(0, ds.n_traj, chunk):
        hi = min(lo + chunk, ds.n_traj)
        pm = model.predict_fields(s0[lo:hi], mu[lo:hi], [dt] * (factor * F),
                                  guard=guard)
        preds[lo:hi] = ds.denormalize(pm)
    res = nrmse(preds, truth)
    if factor == 1:
        train_time = res.overall
    else:
        sub = res.cells[:, factor - 1:: factor]
        train_time = float(np.nanmean(sub))
    return EvalReport(
        factor=factor,
        dt=dt,
        times=tg.times,
        result=res,
        train_time_nrmse=train_time,
        params=ds.params.astype(np.float64),
        param_names=tuple(ds.provenance.get("param_names") or ()),
    )


def eval_time_generalization(model, ds, factors, guard: float = 1e6,
                             chunk: int = 16) -> dict[int, EvalReport]:
    """One rollout report per refinement factor, ascending."""
    reports = {}
    for a in sorted(set(int(a) for a in factors)):
        reports[a] = evaluate_rollout(model, ds, factor=a, guard=guard, chunk=chunk)
    return reports


def write_report_cells(report: EvalReport, path) -> None:
    """Per-(trajectory, time index) relative errors as a CSV table."""
    names = list(report.param_names) or [f"mu{i}" for i in range(report.params.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["traj", "t_index", "t", "rel_l2"] + names)
        for n in range(report.result.cells.shape[0]):
            mu = [f"{v:.10g}" for v in report.params[n]]
            for j in range(report.result.cells.shape[1]):
                val = report.result.cells[n, j]
                sval = "" if np.isnan(val) else f"{val:.10e}"
                w.writerow([n, j + 1, f"{report.times[j + 1]:.10g}", sval] + mu)


def write_summary(reports: dict[int, EvalReport], path) -> None:
    """One summary row per refinement factor."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["factor", "dt", "nrmse", "train_time_nrmse", "excluded_frames"])
        for a, rep in sorted(reports.items()):
            w.writerow([a, f"{rep.dt:.10g}", f"{rep.nrmse:.10e}",
                        f"{rep.train_time_nrmse:.10e}", rep.result.excluded])


def plot_nrmse_vs_time(curves, path, title="rollout error") -> None:
    """SVG line chart of per-time nRMSE.

    curves: iterable of (label, times[1:], per_time values).
    """
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for label, times, values in curves:
        ax.plot(times, values, label=str(label), linewidth=1.4)
    ax.set_xlabel("t")
    ax.set_ylabel("nRMSE")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def report_curves(reports: dict[int, EvalReport]):
    """(label, times, per_time) triples for plot_nrmse_vs_time."""
    out = []
    for a, rep in sorted(reports.items()):
        out.append((f"dt/{a}" if a > 1 else "dt", rep.times[1:], rep.result.per_time))
    return out
