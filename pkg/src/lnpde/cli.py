"""Command-line interface: gen, train, eval, ablate.

Every command echoes the fully resolved configuration and writes it next
to its outputs, so a run can be reproduced from the run directory alone.
Output files are written to a temp path and promoted atomically; a lock
file per output directory prevents concurrent writers.  The environment
variable LNPDE_THREADS caps generator worker processes.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from .datasets import TrajectoryDataset, TruthUnavailableError, generate
from .evaluation import (
    eval_time_generalization,
    plot_nrmse_vs_time,
    report_curves,
    write_report_cells,
    write_summary,
)
from .model import load_checkpoint
from .presets import (
    gen_spec_from_config,
    get_preset,
    model_from_config,
    plan_from_config,
    preset_names,
)
from .training import train

__all__ = ["main"]


class CliError(RuntimeError):
    pass


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


@contextlib.contextmanager
def _dir_lock(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise CliError(
            f"{lock} exists: another process is writing to this directory "
            "(remove the file if it is stale)"
        )
    os.write(fd, str(os.getpid()).encode())
    os.close(fd)
    try:
        yield
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(lock)


def _deep_update(base: dict, override: dict) -> dict:
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], val)
        else:
            base[key] = val
    return base


def _load_config_file(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    return cfg


def _resolve(preset: str | None, config_path: str | None, flag_overrides: dict) -> dict:
    cfg = get_preset(preset) if preset else {"gen": None, "model": {}, "plan": {}}
    cfg["preset"] = preset
    if config_path:
        _deep_update(cfg, _load_config_file(config_path))
    _deep_update(cfg, flag_overrides)
    return cfg


def _echo_config(cfg: dict, out: Path, name: str, quiet: bool) -> None:
    text = json.dumps(cfg, indent=2, sort_keys=True) + "\n"
    _atomic_write_text(out / name, text)
    if not quiet:
        print(text, end="")


def _default_workers() -> int:
    env = os.environ.get("LNPDE_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _parse_factors(text: str) -> list[int]:
    try:
        factors = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"--dt-factors expects comma-separated integers, got {text!r}")
    if not factors or any(a < 1 for a in factors):
        raise CliError("--dt-factors entries must be positive integers")
    return factors


# -- gen ---------------------------------------------------------------------

def _gen_flag_overrides(args) -> dict:
    gen: dict = {}
    for flag, key in [("n_train", "n_train"), ("n_val", "n_val"),
                      ("n_test", "n_test"), ("steps", "steps"), ("dt", "dt")]:
        val = getattr(args, flag)
        if val is not None:
            gen[key] = val
    if args.points is not None:
        gen["points"] = [int(tok) for tok in args.points.lower().split("x")]
    if args.seed is not None:
        gen["seed"] = args.seed
    return {"gen": gen} if gen else {}


def cmd_gen(args) -> int:
    cfg = _resolve(args.preset, args.config, _gen_flag_overrides(args))
    if cfg.get("gen") is None:
        raise CliError("nothing to generate: preset has no generator section")
    out = Path(args.out)
    spec = gen_spec_from_config(cfg["gen"])
    paths = {name: out / f"{name}.lnpds" for name in ("train", "val", "test")}
    clobber = [str(p) for p in paths.values() if p.exists()]
    if clobber and not args.force:
        raise CliError(f"refusing to overwrite {', '.join(clobber)} (use --force)")
    with _dir_lock(out):
        _echo_config(cfg, out, "gen_config.json", args.quiet)
        tr, vl, te = generate(spec, workers=args.workers)
        for name, ds in [("train", tr), ("val", vl), ("test", te)]:
            ds.save(paths[name])
            if not args.quiet:
                print(f"wrote {paths[name]} ({ds.n_traj} trajectories)")
    return 0


# -- train -------------------------------------------------------------------

def _train_flag_overrides(args) -> dict:
    plan: dict = {}
    model: dict = {}
    for flag, key in [("strategy", "strategy"), ("delta", "delta"),
                      ("lr", "lr0"), ("gamma0", "gamma0"),
                      ("gamma_lr", "gamma_lr"), ("lambda_rg", "lambda_rg"),
                      ("batch", "batch_size"), ("epochs", "max_epochs"),
                      ("patience", "patience")]:
        val = getattr(args, flag)
        if val is not None:
            plan[key] = float(val) if isinstance(val, float) else val
    if args.rk_stage is not None:
        model["stage"] = args.rk_stage
    if args.seed is not None:
        plan["seed"] = args.seed
        model["seed"] = args.seed
    out: dict = {}
    if plan:
        out["plan"] = plan
    if model:
        out["model"] = model
    return out


def _load_split(data_dir: Path, name: str) -> TrajectoryDataset:
    path = data_dir / f"{name}.lnpds"
    if not path.exists():
        raise CliError(f"dataset file {path} not found")
    return TrajectoryDataset.load(path)


def _run_training(cfg: dict, data_dir: Path, out: Path, resume: bool,
                  quiet: bool) -> dict:
    tr = _load_split(data_dir, "train")
    vl = _load_split(data_dir, "val")
    model = model_from_config(cfg["model"], tr)
    plan = plan_from_config(cfg["plan"])

    def progress(epoch, row):
        print(f"epoch {epoch:4d}  ltr={row['ltr']:.4e}  lvl={row['lvl']:.4e}  "
              f"lr={row['lr']:.2e}  k2={row['k2']}  gamma={row['gamma']:.3f}"
              + (f"  skipped={row['skipped']}" if row["skipped"] else ""))

    summary = train(model, tr, vl, plan, out, resume=resume,
                    progress=None if quiet else progress)
    _atomic_write_text(out / "run.json", json.dumps(summary, indent=2) + "\n")
    if not quiet:
        print(f"done: best lvl {summary['best_vl']:.6e} after "
              f"{summary['epochs_run']} epochs ({summary['stopped']})")
    return summary


def cmd_train(args) -> int:
    cfg = _resolve(args.preset, args.config, _train_flag_overrides(args))
    if not cfg.get("model") or not cfg.get("plan"):
        raise CliError("train needs --preset or a config file with model/plan sections")
    out = Path(args.out)
    data_dir = Path(args.data)
    if (out / "log.csv").exists() and not (args.resume or args.force):
        raise CliError(f"{out} already holds a run (use --resume or --force)")
    with _dir_lock(out):
        cfg["data"] = str(data_dir)
        _echo_config(cfg, out, "config.json", args.quiet)
        _run_training(cfg, data_dir, out, args.resume, args.quiet)
    return 0


# -- eval --------------------------------------------------------------------

def _eval_one(model, ds, factors, out: Path, stem: str, chunk: int, quiet: bool) -> dict:
    reports = eval_time_generalization(model, ds, factors, chunk=chunk)
    for a, rep in reports.items():
        cells = out / f"{stem}_cells_dt{a}.csv"
        write_report_cells(rep, cells.with_name(cells.name + ".tmp"))
        os.replace(cells.with_name(cells.name + ".tmp"), cells)
    summ = out / f"{stem}_summary.csv"
    write_summary(reports, summ.with_name(summ.name + ".tmp"))
    os.replace(summ.with_name(summ.name + ".tmp"), summ)
    svg = out / f"{stem}_nrmse_vs_time.svg"
    plot_nrmse_vs_time(report_curves(reports), svg.with_name(svg.name + ".tmp"))
    os.replace(svg.with_name(svg.name + ".tmp"), svg)
    result = {
        str(a): {
            "dt": rep.dt,
            "nrmse": rep.nrmse,
            "train_time_nrmse": rep.train_time_nrmse,
            "excluded_frames": rep.result.excluded,
            "per_param": {json.dumps(list(k)): v for k, v in rep.per_param().items()},
        }
        for a, rep in reports.items()
    }
    if not quiet:
        for a, rep in sorted(reports.items()):
            print(f"factor {a}: nRMSE {rep.nrmse:.6f} "
                  f"(training times {rep.train_time_nrmse:.6f})")
    return result


def cmd_eval(args) -> int:
    if args.checkpoint:
        ck_path = Path(args.checkpoint)
    elif args.run:
        ck_path = Path(args.run) / "best.lnpde"
    else:
        raise CliError("eval needs --run or --checkpoint")
    if not ck_path.exists():
        raise CliError(f"checkpoint {ck_path} not found")
    if args.dataset:
        ds = TrajectoryDataset.load(args.dataset)
    elif args.data:
        ds = _load_split(Path(args.data), args.split)
    else:
        raise CliError("eval needs --data or --dataset")
    out = Path(args.out) if args.out else (
        Path(args.run) / "eval" if args.run else Path("eval"))
    factors = _parse_factors(args.dt_factors)
    model, train_meta, _ = load_checkpoint(ck_path)
    with _dir_lock(out):
        cfg = {"checkpoint": str(ck_path), "dt_factors": factors,
               "split": args.split, "model": model.config_meta()}
        _echo_config(cfg, out, "eval_config.json", args.quiet)
        result = _eval_one(model, ds, factors, out, "eval", args.chunk, args.quiet)
        _atomic_write_text(out / "eval.json", json.dumps(result, indent=2) + "\n")
    return 0


# -- ablate ------------------------------------------------------------------

def _ablate_matrix(axis: str) -> list[tuple[str, dict]]:
    if axis == "rk-stage":
        return [(f"q{q}", {"model": {"stage": q}}) for q in (1, 2, 3, 4)]
    if axis == "l3":
        return [("delta0", {"plan": {"delta": 0.0}}),
                ("delta1", {"plan": {"delta": 1.0}})]
    raise CliError("--axis must be rk-stage or l3")


def cmd_ablate(args) -> int:
    import copy

    base = _resolve(args.preset, args.config, _train_flag_overrides(args))
    if not base.get("model") or not base.get("plan"):
        raise CliError("ablate needs --preset or a config file with model/plan sections")
    out = Path(args.out)
    data_dir = Path(args.data)
    factors = _parse_factors(args.dt_factors)
    te = _load_split(data_dir, "test")
    rows = []
    summary: dict = {}
    with _dir_lock(out):
        base["data"] = str(data_dir)
        base["axis"] = args.axis
        _echo_config(base, out, "ablate_config.json", args.quiet)
        curves = []
        for label, override in _ablate_matrix(args.axis):
            cfg = _deep_update(copy.deepcopy(base), override)
            run_dir = out / label
            if not args.quiet:
                print(f"== {label} ==")
            _run_training(cfg, data_dir, run_dir, resume=False, quiet=args.quiet)
            model, _, _ = load_checkpoint(run_dir / "best.lnpde")
            reports = eval_time_generalization(model, te, factors, chunk=args.chunk)
            summary[label] = {}
            for a, rep in sorted(reports.items()):
                summary[label][str(a)] = {
                    "nrmse": rep.nrmse, "train_time_nrmse": rep.train_time_nrmse,
                }
                tag = f"{label} dt/{a}" if a > 1 else f"{label} dt"
                curves.append((tag, rep.times[1:], rep.result.per_time))
                for j, t in enumerate(rep.times[1:]):
                    rows.append((label, a, j + 1, t, rep.result.per_time[j]))
            hi = max(factors)
            if hi > 1 and summary[label]["1"]["nrmse"] > 0:
                summary[label]["degradation_ratio"] = (
                    summary[label][str(hi)]["nrmse"] / summary[label]["1"]["nrmse"]
                )
        lines = ["label,factor,t_index,t,nrmse"]
        lines += [f"{l},{a},{j},{t:.10g},{v:.10e}" for l, a, j, t, v in rows]
        _atomic_write_text(out / "ablate.csv", "\n".join(lines) + "\n")
        svg = out / "ablate.svg"
        plot_nrmse_vs_time(curves, svg.with_name(svg.name + ".tmp"),
                           title=f"ablation: {args.axis}")
        os.replace(svg.with_name(svg.name + ".tmp"), svg)
        _atomic_write_text(out / "ablate.json", json.dumps(summary, indent=2) + "\n")
    if not args.quiet:
        print(json.dumps(summary, indent=2))
    return 0


# -- parser ------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="JSON config file overriding preset values")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--quiet", action="store_true")


def _add_train_flags(p):
    p.add_argument("--strategy", type=int, choices=(1, 2), default=None)
    p.add_argument("--rk-stage", type=int, choices=(1, 2, 3, 4), default=None)
    p.add_argument("--delta", type=int, choices=(0, 1), default=None,
                   help="time-generalization loss on/off")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--gamma0", type=float, default=None)
    p.add_argument("--gamma-lr", type=float, default=None)
    p.add_argument("--lambda-rg", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lnpde",
        description="Latent neural-ODE surrogates for parametric time-dependent PDEs",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate train/val/test trajectory files")
    g.add_argument("--preset", choices=preset_names())
    g.add_argument("--out", required=True)
    g.add_argument("--force", action="store_true")
    g.add_argument("--workers", type=int, default=_default_workers())
    g.add_argument("--n-train", type=int, default=None)
    g.add_argument("--n-val", type=int, default=None)
    g.add_argument("--n-test", type=int, default=None)
    g.add_argument("--points", default=None, help="e.g. 64 or 128x128")
    g.add_argument("--steps", type=int, default=None)
    g.add_argument("--dt", type=float, default=None)
    _add_common(g)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a surrogate on generated data")
    t.add_argument("--preset", choices=preset_names())
    t.add_argument("--data", required=True, help="directory with train/val .lnpds")
    t.add_argument("--out", required=True)
    t.add_argument("--resume", action="store_true")
    t.add_argument("--force", action="store_true")
    _add_train_flags(t)
    _add_common(t)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score rollouts, incl. refined time steps")
    e.add_argument("--run", help="training run directory (uses best.lnpde)")
    e.add_argument("--checkpoint", help="explicit checkpoint path")
    e.add_argument("--data", help="dataset directory")
    e.add_argument("--dataset", help="explicit .lnpds file")
    e.add_argument("--split", default="test", choices=("train", "val", "test"))
    e.add_argument("--out", default=None)
    e.add_argument("--dt-factors", default="1,5")
    e.add_argument("--chunk", type=int, default=16)
    _add_common(e)
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("ablate", help="train/eval a comparison matrix")
    a.add_argument("--axis", required=True, choices=("rk-stage", "l3"))
    a.add_argument("--preset", choices=preset_names())
    a.add_argument("--data", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--dt-factors", default="1,5")
    a.add_argument("--chunk", type=int, default=16)
    _add_train_flags(a)
    _add_common(a)
    a.set_defaults(func=cmd_ablate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, TruthUnavailableError, FileNotFoundError, ValueError,
            KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
