"""Command-line front end.

    hypokin simulate|gap|weights|sweep <config> [--out DIR] [--jobs N] [--seed S]

Every command reads one TOML config (or the config echo inside a
previously written manifest.json) and writes its artifacts into the
output directory: manifest.json + series.csv for simulate, gaps.json,
weights.json, or per-point subdirectories plus sweep_summary.csv.

Exit codes: 0 success, 2 config/schema error, 3 runtime abort (NaN,
conservation breach, range violation, failed eigensolve), 4 I/O error.
The default output directory is <config stem>.out under the current
directory; the HYPOKIN_OUT environment variable overrides that root and
--out overrides the full path.  Series are written with 17 significant
digits, so re-running a manifest on the same build reproduces the CSV
byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import __version__
from .config import (
    SchemaError,
    build_potential,
    build_run_config,
    format_float,
    load_config,
    sweep_points,
)
from .constants import (
    gap_bound_fermion,
    gap_relaxation,
    measure_constants,
    numeric_gap,
    select_weights,
    weight_margins,
)
from .hypo import DecayReport
from .kernels import backend_name
from .models import SemiClassicalModel
from .solver import (
    RunConfig,
    build_model,
    run_linear,
    run_nonlinear_sc,
    run_poisson,
    run_with_potential,
)

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_RUNTIME = 3
EXIT_IO = 4

__all__ = [
    "main",
    "cmd_simulate",
    "cmd_gap",
    "cmd_weights",
    "cmd_sweep",
    "series_columns",
    "write_series",
]


def _fail(message: str) -> None:
    click.echo(f"hypokin: {message}", err=True)


def _out_dir(config_path: str, out_flag: Optional[str]) -> Path:
    if out_flag:
        return Path(out_flag)
    root = Path(os.environ.get("HYPOKIN_OUT", "."))
    return root / (Path(config_path).stem + ".out")


def series_columns(resolved: dict) -> list[str]:
    """CSV schema for a config; a pure function of the model/run kind."""
    cols = ["t", "l2", "h1", "lyapunov", "lambda", "mass"]
    equation = resolved["run"]["equation"]
    if equation == "poisson":
        cols.append("field_energy")
    if equation == "nonlinear":
        cols.extend(["fmin", "fmax"])
    return cols


def write_series(report: DecayReport, cols: list[str], path: Path) -> None:
    table = report.columns()
    lines = [",".join(cols)]
    n = report.times.size
    for i in range(n):
        lines.append(",".join(format_float(table[c][i]) for c in cols))
    path.write_text("\n".join(lines) + "\n")


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _execute(rc: RunConfig, resolved: dict, model, weights, constants) -> DecayReport:
    kwargs = dict(model=model, weights=weights, constants=constants)
    if rc.equation == "linear":
        return run_linear(rc, **kwargs)
    if rc.equation == "nonlinear":
        return run_nonlinear_sc(rc, **kwargs)
    if rc.equation == "potential":
        grid = model.grid
        return run_with_potential(rc, build_potential(resolved, grid), **kwargs)
    return run_poisson(rc, **kwargs)


def _manifest(resolved, rc, model, constants, weights, report, cols, duration) -> dict:
    eq = None
    if isinstance(model, SemiClassicalModel):
        eq = {
            "rho": model.equilibrium.rho,
            "epsilon": model.equilibrium.epsilon,
            "kappa_inf": model.equilibrium.kappa_inf,
        }
    cdict = dataclasses.asdict(constants)
    return {
        "tool": "hypokin",
        "version": __version__,
        "backend": backend_name(),
        "seed": rc.seed,
        "config": resolved,
        "equilibrium": eq,
        "constants": cdict,
        "weights": weights.as_dict(),
        "weight_margins": weight_margins(constants, weights),
        "series_columns": cols,
        "tau_fit": _json_safe(report.tau_fit),
        "fit_r2": _json_safe(report.fit_r2),
        "fit_window": [_json_safe(report.fit_window[0]), _json_safe(report.fit_window[1])],
        "fit_series": report.fit_series,
        "fit_conclusive": report.fit_conclusive,
        "monotone_violations": report.monotone_violations,
        "duration_seconds": duration,
    }


def cmd_simulate(config_path: str, out: Optional[str] = None, seed: Optional[int] = None) -> int:
    try:
        resolved = load_config(config_path)
        if seed is not None:
            resolved["seed"] = seed
        rc = build_run_config(resolved)
    except SchemaError as exc:
        _fail(str(exc))
        return EXIT_SCHEMA
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO

    try:
        t0 = time.perf_counter()
        grid = rc.grid.build()
        model = build_model(rc.model, grid)
        constants = measure_constants(model, grid)
        weights = select_weights(constants)
        report = _execute(rc, resolved, model, weights, constants)
        duration = time.perf_counter() - t0
    except (SchemaError, ValueError) as exc:
        _fail(str(exc))
        return EXIT_SCHEMA
    except Exception as exc:
        _fail(str(exc))
        return EXIT_RUNTIME

    try:
        out_dir = _out_dir(config_path, out)
        out_dir.mkdir(parents=True, exist_ok=True)
        cols = series_columns(resolved)
        write_series(report, cols, out_dir / "series.csv")
        _write_json(
            _manifest(resolved, rc, model, constants, weights, report, cols, duration),
            out_dir / "manifest.json",
        )
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO

    tau = "inconclusive" if not report.fit_conclusive else format_float(report.tau_fit)
    click.echo(
        f"{rc.model.kind} {rc.equation} run: {report.times.size} samples, "
        f"tau_fit = {tau} (r2 = {report.fit_r2:.4f}), "
        f"monotone violations = {report.monotone_violations}"
    )
    click.echo(f"wrote {out_dir / 'series.csv'} and {out_dir / 'manifest.json'}")
    return EXIT_OK


def _gap_row(resolved: dict) -> dict:
    rc = build_run_config(resolved)
    grid = rc.grid.build()
    model = build_model(rc.model, grid)
    numeric = numeric_gap(model, grid, metric="l2")
    kind = rc.model.kind
    extra: dict = {}
    if kind == "relaxation":
        bound = gap_relaxation(rc.model.kappa)
    elif kind == "semiclassical":
        if model.equilibrium.epsilon > 0:
            bound = gap_bound_fermion(rc.model.rho, rc.model.kappa, model.equilibrium, grid)
        else:
            # classical/boson: the loss profile floors the spectrum
            bound = float(np.min(model.frequency))
    else:
        bound = 1.0
        extra["lambda_metric_gap"] = numeric_gap(model, grid, metric="lambda")
    return {
        "model": kind,
        "kappa": rc.model.kappa,
        "rho": rc.model.rho,
        "epsilon": rc.model.epsilon,
        "bound": bound,
        "numeric": numeric,
        "margin": numeric - bound,
        **extra,
    }


def cmd_gap(config_path: str, out: Optional[str] = None, seed: Optional[int] = None) -> int:
    try:
        resolved = load_config(config_path)
        if seed is not None:
            resolved["seed"] = seed
        row = _gap_row(resolved)
    except SchemaError as exc:
        _fail(str(exc))
        return EXIT_SCHEMA
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO
    except Exception as exc:
        _fail(f"gap computation failed: {exc}")
        return EXIT_RUNTIME

    try:
        out_dir = _out_dir(config_path, out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json({"models": [row]}, out_dir / "gaps.json")
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO

    click.echo(f"{'model':<14} {'bound':>20} {'numeric':>20} {'margin':>12}")
    click.echo(
        f"{row['model']:<14} {row['bound']:>20.12g} {row['numeric']:>20.12g} "
        f"{row['margin']:>12.3g}"
    )
    if "lambda_metric_gap" in row:
        click.echo(f"coercivity-metric gap: {row['lambda_metric_gap']:.12g}")
    click.echo(f"wrote {out_dir / 'gaps.json'}")
    return EXIT_OK


def cmd_weights(config_path: str, out: Optional[str] = None, seed: Optional[int] = None) -> int:
    try:
        resolved = load_config(config_path)
        if seed is not None:
            resolved["seed"] = seed
        rc = build_run_config(resolved)
    except SchemaError as exc:
        _fail(str(exc))
        return EXIT_SCHEMA
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO

    try:
        grid = rc.grid.build()
        model = build_model(rc.model, grid)
        constants = measure_constants(model, grid)
        weights = select_weights(constants)
        margins = weight_margins(constants, weights)
    except Exception as exc:
        _fail(f"weight selection failed: {exc}")
        return EXIT_RUNTIME

    try:
        out_dir = _out_dir(config_path, out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(
            {
                "model": rc.model.kind,
                "weights": weights.as_dict(),
                "margins": margins,
                "constants": dataclasses.asdict(constants),
            },
            out_dir / "weights.json",
        )
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO

    for name, val in weights.as_dict().items():
        click.echo(f"{name:<12} {val:.12g}")
    for name, val in margins.items():
        click.echo(f"margin {name:<22} {val:.6g}")
    click.echo(f"wrote {out_dir / 'weights.json'}")
    return EXIT_OK


def _run_sweep_point(args: tuple[str, dict, str]) -> dict:
    label, resolved, out_dir = args
    row = {
        "label": label,
        "status": "ok",
        "tau_fit": float("nan"),
        "fit_r2": float("nan"),
        "monotone_violations": -1,
    }
    try:
        rc = build_run_config(resolved)
        grid = rc.grid.build()
        model = build_model(rc.model, grid)
        constants = measure_constants(model, grid)
        weights = select_weights(constants)
        t0 = time.perf_counter()
        report = _execute(rc, resolved, model, weights, constants)
        duration = time.perf_counter() - t0
        cols = series_columns(resolved)
        point_dir = Path(out_dir)
        point_dir.mkdir(parents=True, exist_ok=True)
        write_series(report, cols, point_dir / "series.csv")
        _write_json(
            _manifest(resolved, rc, model, constants, weights, report, cols, duration),
            point_dir / "manifest.json",
        )
        row["tau_fit"] = report.tau_fit
        row["fit_r2"] = report.fit_r2
        row["monotone_violations"] = report.monotone_violations
    except Exception as exc:  # isolate the point; the sweep itself goes on
        row["status"] = f"failed: {exc}"
    return row


def cmd_sweep(
    config_path: str,
    out: Optional[str] = None,
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
) -> int:
    try:
        resolved = load_config(config_path)
        if seed is not None:
            resolved["seed"] = seed
        points = sweep_points(resolved)
    except SchemaError as exc:
        _fail(str(exc))
        return EXIT_SCHEMA
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO

    out_dir = _out_dir(config_path, out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO

    param = resolved["sweep"]["parameter"]
    values = resolved["sweep"]["values"]
    tasks = [
        (label, point, str(out_dir / label)) for (label, point) in points
    ]
    workers = jobs or os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_sweep_point, tasks))
    else:
        rows = [_run_sweep_point(t) for t in tasks]

    try:
        lines = ["label,parameter,value,status,tau_fit,fit_r2,monotone_violations"]
        for (label, _, _), value, row in zip(tasks, values, rows):
            status = row["status"].replace(",", ";")
            lines.append(
                f"{label},{param},{value},{status},"
                f"{format_float(row['tau_fit'])},{format_float(row['fit_r2'])},"
                f"{row['monotone_violations']}"
            )
        (out_dir / "sweep_summary.csv").write_text("\n".join(lines) + "\n")
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO

    n_bad = sum(1 for r in rows if r["status"] != "ok")
    click.echo(
        f"swept {param} over {len(rows)} points ({n_bad} failed); "
        f"wrote {out_dir / 'sweep_summary.csv'}"
    )
    return EXIT_OK


@click.group()
@click.version_option(__version__, prog_name="hypokin")
def main() -> None:
    """Hypocoercivity laboratory for kinetic models on the torus."""


def _common(fn):
    fn = click.option("--seed", type=int, default=None, help="Override the config seed.")(fn)
    fn = click.option("--out", type=click.Path(), default=None, help="Output directory.")(fn)
    fn = click.argument("config", type=click.Path())(fn)
    return fn


@main.command("simulate")
@_common
def _simulate_cmd(config: str, out: Optional[str], seed: Optional[int]) -> None:
    sys.exit(cmd_simulate(config, out, seed))


@main.command("gap")
@_common
def _gap_cmd(config: str, out: Optional[str], seed: Optional[int]) -> None:
    sys.exit(cmd_gap(config, out, seed))


@main.command("weights")
@_common
def _weights_cmd(config: str, out: Optional[str], seed: Optional[int]) -> None:
    sys.exit(cmd_weights(config, out, seed))


@main.command("sweep")
@_common
@click.option("--jobs", type=int, default=None, help="Worker processes (default: cores).")
def _sweep_cmd(config: str, out: Optional[str], seed: Optional[int], jobs: Optional[int]) -> None:
    sys.exit(cmd_sweep(config, out, jobs, seed))


if __name__ == "__main__":
    main()
