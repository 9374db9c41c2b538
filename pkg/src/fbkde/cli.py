"""Command-line front end: ``fbkde {fit,eval,bench,sweep,plotdata}``.

Settings resolve in increasing priority: built-in defaults, the
``[common]`` section of ``--config``, the section named after the
command, then explicit flags. Config keys use the flag names without the
leading dashes (``sigma-gamma`` and ``sigma_gamma`` are both accepted).

Custom densities can be declared in the config file and referred to by
name::

    [density:skewed]
    weights = 0.3, 0.7
    means = -1, 2
    stds = 0.5, 1

    [density:ramp]
    triangle = 0, 1, 4

Multi-dimensional means separate components with ``;`` and coordinates
with spaces, e.g. ``means = 0 0; 2 2``.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boxgrid import fit_box_fbkde
from .estimator import FitConfig, Standardizer
from .evaluation import evaluate, evaluation_grid
from .experiments import (METHODS, SWEEP_SIZES, TUNINGS, StandardizedDensity, bench, fit_method,
                          format_table, plot_data, sweep, sweep_long_rows)
from .io import DataError, dump_json, load_model, model_to_dict, read_csv, write_csv
from .qp import SolverSettings
from .synthetic import DENSITIES, MixtureDensity

log = logging.getLogger("fbkde")

COMMANDS = ("fit", "eval", "bench", "sweep", "plotdata")

# (type, default) per setting; None defaults mean "derive from the data"
SETTINGS = {
    "density": (str, None),
    "csv": (str, None),
    "n": (str, None),
    "seed": (int, 0),
    "method": (str, None),
    "tuning": (str, None),
    "out": (str, None),
    "repeats": (int, None),
    "draws": (int, 100),
    "sigma": (float, None),
    "radius": (float, None),
    "sigma_gamma": (float, None),
    "q": (int, None),
    "m": (int, None),
    "outside": (str, "reject"),
    "model": (str, None),
    "grid_points": (int, 2001),
    "delta": (float, 0.05),
    "max_iters": (int, 10000),
    "tol": (float, 1e-6),
}


class UsageError(Exception):
    """Invalid combination of settings."""


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value settings file with [common] and per-command sections")
    p.add_argument("--density", help=f"synthetic density name ({', '.join(sorted(DENSITIES))} or a config-defined one)")
    p.add_argument("--csv", help="CSV data file: header row, then one numeric row per sample")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", help="output path (prefix for bench/sweep/plotdata)")
    p.add_argument("--max-iters", type=int, dest="max_iters", help="ADMM iteration cap (default 10000)")
    p.add_argument("--tol", type=float, help="ADMM primal/dual tolerance (default 1e-6)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fbkde", description="Fixed-bandwidth weighted kernel density estimation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one estimator and write the model as JSON")
    _add_common(p)
    p.add_argument("--n", help="number of samples to draw from --density (default 800)")
    p.add_argument("--method", help="fbkde, kde, vkde or box (default fbkde)")
    p.add_argument("--tuning", help="rot or cv (default rot)")
    p.add_argument("--draws", type=int, help="random-search draws for --tuning cv (default 100)")
    p.add_argument("--sigma", type=float, help="fix the bandwidth (standardized units)")
    p.add_argument("--radius", type=float, help="fix the l1 radius R_n")
    p.add_argument("--sigma-gamma", type=float, dest="sigma_gamma", help="fix the jitter std")
    p.add_argument("--q", type=int, help="box method: bandwidth 1/(2q)")
    p.add_argument("--m", type=int, help="box method: cells per kernel side")
    p.add_argument("--outside", help="box method: 'reject' or 'clamp' points outside [0, 1]^d")

    p = sub.add_parser("eval", help="score a saved model on test data")
    _add_common(p)
    p.add_argument("--model", help="model JSON written by 'fit'")
    p.add_argument("--n", help="number of test samples to draw from --density (default 200)")
    p.add_argument("--grid-points", type=int, dest="grid_points", help="grid points per axis (default 2001)")
    p.add_argument("--delta", type=float, help="confidence level of the deviation bound (default 0.05)")

    p = sub.add_parser("bench", help="compare estimators and tunings over repeated splits")
    _add_common(p)
    p.add_argument("--n", help="total samples per repetition, split 4/5 train (default 1000)")
    p.add_argument("--method", help="comma-separated subset of fbkde,kde,vkde")
    p.add_argument("--tuning", help="comma-separated subset of rot,cv")
    p.add_argument("--repeats", type=int, help="repetitions (default 20)")
    p.add_argument("--draws", type=int, help="random-search draws for cv (default 100)")
    p.add_argument("--grid-points", type=int, dest="grid_points", help="sup-norm grid points (default 2001)")

    p = sub.add_parser("sweep", help="rule-of-thumb errors across training sizes")
    _add_common(p)
    p.add_argument("--n", help=f"comma-separated training sizes (default {','.join(map(str, SWEEP_SIZES))})")
    p.add_argument("--method", help="comma-separated subset of fbkde,kde,vkde")
    p.add_argument("--repeats", type=int, help="repetitions per size (default 10)")
    p.add_argument("--grid-points", type=int, dest="grid_points", help="sup-norm grid points (default 2001)")

    p = sub.add_parser("plotdata", help="curves and weight stems for a 1-D fit as CSV")
    _add_common(p)
    p.add_argument("--n", help="training samples drawn from --density (default 800)")
    p.add_argument("--grid-points", type=int, dest="grid_points", help="curve grid points (default 2001)")
    return parser


def _norm_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def _read_config(path):
    cp = configparser.ConfigParser(interpolation=None)
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        cp.read(p, encoding="utf-8")
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from None
    return cp


def _parse_floats(text: str) -> list:
    return [float(t) for t in text.replace(",", " ").split()]


def density_from_section(name: str, section) -> MixtureDensity:
    """Build a density from a ``[density:NAME]`` config section."""
    keys = {_norm_key(k): v for k, v in section.items()}
    try:
        if "triangle" in keys:
            a, c, b = _parse_floats(keys["triangle"])
            return MixtureDensity.triangular(a, c, b, name=name)
        weights = _parse_floats(keys["weights"])
        stds = _parse_floats(keys["stds"])
        raw = keys["means"]
        means = ([_parse_floats(part) for part in raw.split(";")] if ";" in raw
                 else [[v] for v in _parse_floats(raw)])
        if not len(weights) == len(means) == len(stds):
            raise ValueError("weights, means and stds need one entry per component")
        return MixtureDensity.gaussian_mixture(weights, means, stds, name=name)
    except KeyError as exc:
        raise UsageError(f"density {name!r}: missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise UsageError(f"density {name!r}: {exc}") from None


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config sections and flags into one settings dict."""
    settings = {k: default for k, (_, default) in SETTINGS.items()}
    custom = {}
    if getattr(args, "config", None):
        cp = _read_config(args.config)
        for section in cp.sections():
            if section.lower().startswith("density:"):
                name = section.split(":", 1)[1].strip().lower()
                custom[name] = density_from_section(name, cp[section])
        for section in ("common", args.command):
            if not cp.has_section(section):
                continue
            for key, value in cp[section].items():
                key = _norm_key(key)
                if key not in SETTINGS:
                    raise UsageError(f"config [{section}]: unknown key {key!r}")
                kind = SETTINGS[key][0]
                try:
                    settings[key] = kind(value)
                except ValueError:
                    raise UsageError(f"config [{section}]: {key} = {value!r} is not a valid {kind.__name__}") from None
    for key in SETTINGS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    settings["command"] = args.command
    settings["_densities"] = custom
    return settings


def _lookup_density(settings: dict, name: str) -> MixtureDensity:
    key = name.strip().lower()
    if key in settings["_densities"]:
        return settings["_densities"][key]
    if key in DENSITIES:
        return DENSITIES[key]
    known = sorted(set(DENSITIES) | set(settings["_densities"]))
    raise UsageError(f"unknown density {name!r}; choose from {known}")


def _one_source(settings: dict) -> None:
    if (settings["density"] is None) == (settings["csv"] is None):
        raise UsageError("give exactly one data source: --density or --csv")


def _int_setting(settings: dict, key: str, default: int) -> int:
    raw = settings[key]
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"--{key} must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"--{key} must be positive")
    return value


def _choice_list(raw, allowed, default) -> list:
    if raw is None:
        return list(default)
    items = [t.strip().lower() for t in str(raw).split(",") if t.strip()]
    bad = [t for t in items if t not in allowed]
    if bad or not items:
        raise UsageError(f"expected a comma-separated subset of {list(allowed)}, got {raw!r}")
    return items


def _solver(settings: dict) -> SolverSettings:
    return SolverSettings(tol_primal=settings["tol"], tol_dual=settings["tol"], max_iters=settings["max_iters"])


def echo(settings: dict) -> dict:
    """Settings that determine the output, for provenance.

    The output path is left out so the same run written to two places
    produces identical files.
    """
    return {k: v for k, v in sorted(settings.items()) if not k.startswith("_") and k != "out"}


def _load_data(settings: dict, default_n: int, seed_offset: int = 0) -> tuple[np.ndarray, MixtureDensity | None]:
    if settings["csv"] is not None:
        _, data = read_csv(settings["csv"])
        return data, None
    density = _lookup_density(settings, settings["density"])
    n = _int_setting(settings, "n", default_n)
    seed = [settings["seed"], seed_offset] if seed_offset else settings["seed"]
    return density.sample(n, np.random.SeedSequence(seed)), density


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_fit(settings: dict) -> int:
    _one_source(settings)
    method = (settings["method"] or "fbkde").lower()
    tuning = (settings["tuning"] or "rot").lower()
    if method not in METHODS + ("box",):
        raise UsageError(f"--method must be one of {list(METHODS) + ['box']}")
    if tuning not in TUNINGS:
        raise UsageError(f"--tuning must be one of {list(TUNINGS)}")
    data, _ = _load_data(settings, 800)
    n, d = data.shape
    solver = _solver(settings)
    meta = {"config": echo(settings), "n_train": n, "dim": d, "method": method, "tuning": tuning}

    if method == "box":
        if settings["q"] is None or settings["m"] is None:
            raise UsageError("--method box needs --q and --m")
        if settings["radius"] is None:
            raise UsageError("--method box needs --radius")
        if settings["outside"] not in ("reject", "clamp"):
            raise UsageError("--outside must be 'reject' or 'clamp'")
        cfg = FitConfig(sigma=1.0 / (2 * settings["q"]), radius=settings["radius"], solver=solver,
                        seed=settings["seed"])
        fit = fit_box_fbkde(data, settings["q"], settings["m"], cfg, settings["outside"])
        meta["params"] = {"q": settings["q"], "m": settings["m"], "radius": cfg.radius,
                          "iterations": fit.solution.iterations, "converged": fit.solution.converged}
        doc = model_to_dict(fit.density, None, cfg.radius, meta)
    else:
        std = Standardizer.fit(data)
        overrides = {"sigma": settings["sigma"], "radius": settings["radius"],
                     "sigma_gamma": settings["sigma_gamma"]}
        mf = fit_method(method, tuning, std.transform(data), settings["seed"], settings["draws"], solver, overrides)
        meta["params"] = mf.params
        doc = model_to_dict(mf.density, std, mf.params.get("radius"), meta)
    _write_text(settings["out"], dump_json(doc))
    return 0


def cmd_eval(settings: dict) -> int:
    if settings["model"] is None:
        raise UsageError("eval needs --model")
    _one_source(settings)
    est, std, doc = load_model(settings["model"])
    # offset the seed so a shared --seed does not reuse the training draw
    data, density = _load_data(settings, 200, seed_offset=1)
    if data.shape[1] != est.dim:
        raise DataError(f"test data has {data.shape[1]} columns, model expects {est.dim}")
    truth = None
    if std is not None:
        test = std.transform(data)
        if density is not None:
            truth = StandardizedDensity(density, std)
    else:
        test = data
        truth = density
    grid = None
    if truth is not None and est.dim <= 2:
        grid = evaluation_grid(test, points=settings["grid_points"])
    meta = doc.get("meta", {})
    report = evaluate(est, test, int(meta.get("n_train", 0)), float(doc["radius"]),
                      truth if grid is not None else None, grid, settings["delta"])
    out = {"config": echo(settings), "model": settings["model"], "report": report.to_dict()}
    _write_text(settings["out"], dump_json(out))
    return 0


def _write_outputs(prefix, doc: dict, text: str, extra_csv=None) -> None:
    if prefix is None:
        sys.stdout.write(text)
        return
    dump_json(doc, f"{prefix}.json")
    Path(f"{prefix}.txt").write_text(text, encoding="utf-8")
    if extra_csv is not None:
        header, rows = extra_csv
        write_csv(f"{prefix}.csv", header, rows)


def cmd_bench(settings: dict) -> int:
    if settings["density"] is not None and settings["csv"] is not None:
        raise UsageError("give either --density or --csv, not both")
    methods = _choice_list(settings["method"], METHODS, METHODS)
    tunings = _choice_list(settings["tuning"], TUNINGS, TUNINGS)
    if settings["csv"] is not None:
        _, data = read_csv(settings["csv"])
        datasets = [(Path(settings["csv"]).stem, data)]
    else:
        names = _choice_list(settings["density"], set(DENSITIES) | set(settings["_densities"]),
                             sorted(DENSITIES))
        datasets = [(name, _lookup_density(settings, name)) for name in names]
    rows = bench(datasets, methods, tunings, repeats=_int_setting(settings, "repeats", 20),
                 seed=settings["seed"], n_total=_int_setting(settings, "n", 1000),
                 cv_draws=settings["draws"], grid_points=settings["grid_points"], solver=_solver(settings))
    _write_outputs(settings["out"], {"config": echo(settings), "rows": rows}, format_table(rows))
    return 0


def cmd_sweep(settings: dict) -> int:
    if settings["csv"] is not None:
        raise UsageError("sweep needs a synthetic --density")
    density = _lookup_density(settings, settings["density"] or "bimodal")
    methods = _choice_list(settings["method"], METHODS, METHODS)
    if settings["n"] is None:
        sizes = list(SWEEP_SIZES)
    else:
        try:
            sizes = [int(t) for t in str(settings["n"]).split(",") if t.strip()]
        except ValueError:
            raise UsageError(f"--n must be comma-separated integers, got {settings['n']!r}") from None
        if not sizes or min(sizes) < 6:
            raise UsageError("sweep sizes must be at least 6")
    rows = sweep(density, sizes, methods, repeats=_int_setting(settings, "repeats", 10), seed=settings["seed"],
                 grid_points=settings["grid_points"], solver=_solver(settings))
    long_rows = sweep_long_rows(rows)
    _write_outputs(settings["out"], {"config": echo(settings), "rows": rows}, format_table(rows),
                   (["n", "method", "metric", "mean", "std"], long_rows))
    return 0


def cmd_plotdata(settings: dict) -> int:
    _one_source(settings)
    data, density = _load_data(settings, 800)
    if data.shape[1] != 1:
        raise DataError(f"plot data needs 1-D data, got {data.shape[1]} columns")
    header, rows, stems = plot_data(density, data, settings["seed"], settings["grid_points"], _solver(settings))
    if settings["out"] is None:
        write_csv(sys.stdout, header, rows)
        return 0
    write_csv(f"{settings['out']}.csv", header, rows)
    write_csv(f"{settings['out']}_stems.csv", ["center", "alpha"], stems)
    dump_json({"config": echo(settings), "curves": f"{settings['out']}.csv",
               "stems": f"{settings['out']}_stems.csv"}, f"{settings['out']}.json")
    return 0


HANDLERS = {"fit": cmd_fit, "eval": cmd_eval, "bench": cmd_bench, "sweep": cmd_sweep, "plotdata": cmd_plotdata}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = resolve(args)
        return HANDLERS[args.command](settings)
    except UsageError as exc:
        parser.error(str(exc))
    except (DataError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"fbkde {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
