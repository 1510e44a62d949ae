"""Run configuration: one TOML file, every field defaulted, fully echoed
into the manifest so a run can be reproduced from either artifact.

Schema (defaults in parentheses):

    seed = 1234                       64-bit reproducibility seed

    [model]   kind ("relaxation" | "semiclassical" | "fokker_planck"),
              kappa (1.0), rho (1.0), epsilon (1.0; +1/-1/0 statistics)
    [grid]    n_x (16), length_x (2*pi), n_v (32), v_max (8.0),
              quadrature ("uniform" | "gauss")
    [time]    t_end (20.0), dt (0.01; 0.001 for fokker_planck),
              sample_every (10), scheme ("strang_exact_transport" | "imex_euler")
    [run]     equation ("linear" | "nonlinear" | "potential" | "poisson"),
              order (1)
    [initial] recipe ("mode_times_vM" | "random_band" | "stationary" |
              "relative_mode"), amplitude (1.0; 0.01 for nonlinear), mode (1)
    [potential] amplitude (0.01), mode (1)     potential runs only
    [fit]     series ("h1"), transient_fraction (0.1), window_fraction (0.5)
    [tolerances] mass_rel (1e-10), monotone (1e-9),
              epsilon0_bound (0.05), potential_bound (0.05)
    [sweep]   parameter (dotted key, e.g. "model.kappa"), values (list)

Unknown sections or keys are rejected with the offending name in the
message, as are type and range errors.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .solver import (
    EQUATIONS,
    RECIPES,
    SCHEMES,
    GridSpec,
    InitialSpec,
    ModelSpec,
    PotentialSpec,
    RunConfig,
    potential_from_mode,
)

__all__ = [
    "SchemaError",
    "load_config",
    "resolve",
    "build_run_config",
    "build_potential",
    "sweep_points",
    "format_float",
]


class SchemaError(ValueError):
    """Configuration rejected; the message names the offending field."""


_MODEL_KINDS = ("relaxation", "semiclassical", "fokker_planck")
_QUADRATURES = ("uniform", "gauss")
_FIT_SERIES = ("l2", "h1", "lyapunov", "lambda")


def _want_number(section: str, key: str, val: Any) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise SchemaError(f"{section}.{key} must be a number, got {val!r}")
    if not math.isfinite(float(val)):
        raise SchemaError(f"{section}.{key} must be finite")
    return float(val)


def _want_int(section: str, key: str, val: Any) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise SchemaError(f"{section}.{key} must be an integer, got {val!r}")
    return val


def _want_str(section: str, key: str, val: Any, allowed: tuple[str, ...]) -> str:
    if not isinstance(val, str) or val not in allowed:
        raise SchemaError(
            f"{section}.{key} must be one of {', '.join(allowed)}; got {val!r}"
        )
    return val


def _positive(section: str, key: str, val: float) -> float:
    if val <= 0:
        raise SchemaError(f"{section}.{key} must be positive, got {val}")
    return val


def _section(raw: dict, name: str, known: tuple[str, ...]) -> dict:
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise SchemaError(f"{name} must be a table")
    for key in sec:
        if key not in known:
            raise SchemaError(f"unknown key {name}.{key}")
    return sec


def load_config(path: str | Path) -> dict:
    """Read a TOML config or the config echo of a JSON manifest, and
    resolve it against the schema."""
    p = Path(path)
    try:
        text = p.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read config {p}: {exc}") from exc
    if p.suffix == ".json":
        try:
            manifest = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"manifest {p} is not valid JSON: {exc}") from exc
        raw = manifest.get("config")
        if not isinstance(raw, dict):
            raise SchemaError(f"manifest {p} has no config echo")
    else:
        try:
            raw = tomllib.loads(text.decode("utf-8"))
        except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
            raise SchemaError(f"config {p} is not valid TOML: {exc}") from exc
    return resolve(raw)


def resolve(raw: dict) -> dict:
    """Fill defaults and validate; returns a fully materialized config
    dict whose round trip through resolve() is the identity."""
    known_sections = (
        "seed", "model", "grid", "time", "run", "initial",
        "potential", "fit", "tolerances", "sweep",
    )
    for key in raw:
        if key not in known_sections:
            raise SchemaError(f"unknown section {key}")

    out: dict[str, Any] = {}
    seed = raw.get("seed", 1234)
    out["seed"] = _want_int("top level", "seed", seed)

    sec = _section(raw, "model", ("kind", "kappa", "rho", "epsilon"))
    kind = _want_str("model", "kind", sec.get("kind", "relaxation"), _MODEL_KINDS)
    model = {
        "kind": kind,
        "kappa": _positive("model", "kappa", _want_number("model", "kappa", sec.get("kappa", 1.0))),
        "rho": _positive("model", "rho", _want_number("model", "rho", sec.get("rho", 1.0))),
        "epsilon": _want_number("model", "epsilon", sec.get("epsilon", 1.0)),
    }
    if model["epsilon"] not in (-1.0, 0.0, 1.0):
        raise SchemaError("model.epsilon must be one of -1, 0, +1")
    out["model"] = model

    sec = _section(raw, "grid", ("n_x", "length_x", "n_v", "v_max", "quadrature"))
    grid = {
        "n_x": _want_int("grid", "n_x", sec.get("n_x", 16)),
        "length_x": _positive(
            "grid", "length_x", _want_number("grid", "length_x", sec.get("length_x", 2.0 * math.pi))
        ),
        "n_v": _want_int("grid", "n_v", sec.get("n_v", 32)),
        "v_max": _positive("grid", "v_max", _want_number("grid", "v_max", sec.get("v_max", 8.0))),
        "quadrature": _want_str(
            "grid", "quadrature", sec.get("quadrature", "uniform"), _QUADRATURES
        ),
    }
    if grid["n_x"] < 4:
        raise SchemaError("grid.n_x must be at least 4")
    if grid["n_v"] < 8:
        raise SchemaError("grid.n_v must be at least 8")
    out["grid"] = grid

    sec = _section(raw, "time", ("t_end", "dt", "sample_every", "scheme"))
    default_dt = 1e-3 if kind == "fokker_planck" else 1e-2
    time = {
        "t_end": _positive("time", "t_end", _want_number("time", "t_end", sec.get("t_end", 20.0))),
        "dt": _positive("time", "dt", _want_number("time", "dt", sec.get("dt", default_dt))),
        "sample_every": _want_int("time", "sample_every", sec.get("sample_every", 10)),
        "scheme": _want_str("time", "scheme", sec.get("scheme", "strang_exact_transport"), SCHEMES),
    }
    if time["sample_every"] < 1:
        raise SchemaError("time.sample_every must be at least 1")
    if time["t_end"] < time["dt"]:
        raise SchemaError("time.t_end must cover at least one step")
    out["time"] = time

    sec = _section(raw, "run", ("equation", "order"))
    run = {
        "equation": _want_str("run", "equation", sec.get("equation", "linear"), EQUATIONS),
        "order": _want_int("run", "order", sec.get("order", 1)),
    }
    if run["order"] not in (1, 2):
        raise SchemaError("run.order must be 1 or 2")
    out["run"] = run

    sec = _section(raw, "initial", ("recipe", "amplitude", "mode"))
    default_amp = 0.01 if run["equation"] == "nonlinear" else 1.0
    default_recipe = "relative_mode" if run["equation"] == "nonlinear" else "mode_times_vM"
    initial = {
        "recipe": _want_str("initial", "recipe", sec.get("recipe", default_recipe), RECIPES),
        "amplitude": _want_number("initial", "amplitude", sec.get("amplitude", default_amp)),
        "mode": _want_int("initial", "mode", sec.get("mode", 1)),
    }
    if initial["amplitude"] == 0:
        raise SchemaError("initial.amplitude must be nonzero")
    if initial["mode"] < 1:
        raise SchemaError("initial.mode must be a positive integer")
    out["initial"] = initial

    sec = _section(raw, "potential", ("amplitude", "mode"))
    potential = {
        "amplitude": _want_number("potential", "amplitude", sec.get("amplitude", 0.01)),
        "mode": _want_int("potential", "mode", sec.get("mode", 1)),
    }
    if potential["mode"] < 1:
        raise SchemaError("potential.mode must be a positive integer")
    out["potential"] = potential

    sec = _section(raw, "fit", ("series", "transient_fraction", "window_fraction"))
    fit = {
        "series": _want_str("fit", "series", sec.get("series", "h1"), _FIT_SERIES),
        "transient_fraction": _want_number(
            "fit", "transient_fraction", sec.get("transient_fraction", 0.1)
        ),
        "window_fraction": _want_number("fit", "window_fraction", sec.get("window_fraction", 0.5)),
    }
    if not 0.0 <= fit["transient_fraction"] < 1.0:
        raise SchemaError("fit.transient_fraction must lie in [0, 1)")
    if not 0.0 < fit["window_fraction"] <= 1.0:
        raise SchemaError("fit.window_fraction must lie in (0, 1]")
    out["fit"] = fit

    sec = _section(
        raw, "tolerances", ("mass_rel", "monotone", "epsilon0_bound", "potential_bound")
    )
    tolerances = {
        "mass_rel": _positive(
            "tolerances", "mass_rel", _want_number("tolerances", "mass_rel", sec.get("mass_rel", 1e-10))
        ),
        "monotone": _positive(
            "tolerances", "monotone", _want_number("tolerances", "monotone", sec.get("monotone", 1e-9))
        ),
        "epsilon0_bound": _positive(
            "tolerances",
            "epsilon0_bound",
            _want_number("tolerances", "epsilon0_bound", sec.get("epsilon0_bound", 0.05)),
        ),
        "potential_bound": _positive(
            "tolerances",
            "potential_bound",
            _want_number("tolerances", "potential_bound", sec.get("potential_bound", 0.05)),
        ),
    }
    out["tolerances"] = tolerances

    if "sweep" in raw:
        sec = _section(raw, "sweep", ("parameter", "values"))
        if "parameter" not in sec or "values" not in sec:
            raise SchemaError("sweep needs both sweep.parameter and sweep.values")
        param = sec["parameter"]
        if not isinstance(param, str) or param.count(".") != 1:
            raise SchemaError("sweep.parameter must be a dotted key like model.kappa")
        values = sec["values"]
        if not isinstance(values, list) or len(values) == 0:
            raise SchemaError("sweep.values must be a non-empty list")
        out["sweep"] = {"parameter": param, "values": list(values)}

    # consistency checks across sections
    if run["equation"] == "nonlinear":
        if kind != "semiclassical":
            raise SchemaError("run.equation = nonlinear needs model.kind = semiclassical")
        if abs(initial["amplitude"]) > tolerances["epsilon0_bound"]:
            raise SchemaError(
                "initial.amplitude exceeds tolerances.epsilon0_bound for a nonlinear run"
            )
    if run["equation"] in ("potential", "poisson") and kind != "relaxation":
        raise SchemaError(f"run.equation = {run['equation']} needs model.kind = relaxation")
    return out


def build_run_config(resolved: dict, seed: int | None = None) -> RunConfig:
    """Materialize the dataclasses the solver consumes."""
    m, g, t, r, i, tol, f = (
        resolved["model"],
        resolved["grid"],
        resolved["time"],
        resolved["run"],
        resolved["initial"],
        resolved["tolerances"],
        resolved["fit"],
    )
    try:
        return RunConfig(
            model=ModelSpec(kind=m["kind"], kappa=m["kappa"], rho=m["rho"], epsilon=m["epsilon"]),
            grid=GridSpec(
                n_x=g["n_x"],
                length_x=g["length_x"],
                n_v=g["n_v"],
                v_max=g["v_max"],
                quadrature=g["quadrature"],
            ),
            t_end=t["t_end"],
            dt=t["dt"],
            sample_every=t["sample_every"],
            scheme=t["scheme"],
            equation=r["equation"],
            initial=InitialSpec(
                recipe=i["recipe"], amplitude=i["amplitude"], mode=i["mode"]
            ),
            seed=resolved["seed"] if seed is None else seed,
            order=r["order"],
            epsilon0_bound=tol["epsilon0_bound"],
            potential_bound=tol["potential_bound"],
            mass_rel_tol=tol["mass_rel"],
            monotone_tol=tol["monotone"],
            fit_series=f["series"],
            fit_transient=f["transient_fraction"],
            fit_window=f["window_fraction"],
        )
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def build_potential(resolved: dict, grid) -> PotentialSpec:
    p = resolved["potential"]
    return potential_from_mode(grid, p["amplitude"], p["mode"])


def sweep_points(resolved: dict) -> list[tuple[str, dict]]:
    """Expand the sweep section into labeled single-run configs."""
    if "sweep" not in resolved:
        raise SchemaError("config has no sweep section")
    param = resolved["sweep"]["parameter"]
    section, key = param.split(".")
    points = []
    for val in resolved["sweep"]["values"]:
        point = json.loads(json.dumps(resolved))
        point.pop("sweep")
        if section not in point or key not in point[section]:
            raise SchemaError(f"sweep.parameter {param} is not a config field")
        point[section][key] = val
        label = f"{key}_{val:g}" if isinstance(val, (int, float)) else f"{key}_{val}"
        points.append((label, resolve(point)))
    return points


def format_float(x: float) -> str:
    """17 significant digits: round-trip exact for 64-bit floats."""
    return format(float(x), ".17g")
