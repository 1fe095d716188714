"""Evaluation: rollout metrics, time-generalization reports, plots."""

from ..training.losses import ZeroNormError
from .metrics import ZERO_NORM_FLOOR, NrmseResult, nrmse, relative_error_field
from .reports import (
    EvalReport,
    eval_time_generalization,
    evaluate_rollout,
    plot_nrmse_vs_time,
    report_curves,
    write_report_cells,
    write_summary,
)

__all__ = [
    "EvalReport",
    "NrmseResult",
    "ZERO_NORM_FLOOR",
    "ZeroNormError",
    "eval_time_generalization",
    "evaluate_rollout",
    "nrmse",
    "plot_nrmse_vs_time",
    "relative_error_field",
    "report_curves",
    "write_report_cells",
    "write_summary",
]
