"""Benchmark orchestration behind the ``bench``, ``sweep`` and ``plotdata`` commands.

A *cell* is one (dataset, method, tuning) combination; each repetition
draws fresh data, splits 4/5 train and 1/5 test, standardizes with the
training statistics and scores every method on the same split. Seeds are
derived from ``(master seed, dataset index, repetition)`` so cells do not
depend on evaluation order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .estimator import FitConfig, Standardizer, WeightedDensity, fit_fbkde, fit_kde, fit_vkde
from .evaluation import evaluation_grid, ise, j_test, sup_error
from .kernels import as_points, as_samples
from .qp import SolverSettings
from .synthetic import MixtureDensity
from .tuning import CvPlan, cross_validate, gamma_rule, radius_rule, silverman_sigma

log = logging.getLogger(__name__)

METHODS = ("fbkde", "kde", "vkde")
TUNINGS = ("rot", "cv")
SWEEP_SIZES = (50, 250, 450, 1050, 1650, 1850, 2050)
METRICS = ("j_test", "sup_error", "ise")


@dataclass(frozen=True)
class StandardizedDensity:
    """A known density seen through a :class:`Standardizer`.

    ``pdf(z) = jacobian * f(mean + scale * z)``, which works for any
    per-dimension scales (unlike :meth:`MixtureDensity.rescaled`).
    """

    density: MixtureDensity
    standardizer: Standardizer

    @property
    def dim(self) -> int:
        return self.density.dim

    def pdf(self, z):
        scalar = np.ndim(z) == 0
        pts = as_points(z, self.dim)
        out = self.density.pdf(self.standardizer.inverse_transform(pts)) * self.standardizer.jacobian
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    test: np.ndarray
    standardizer: Standardizer
    density: StandardizedDensity | None = None
    """True density in standardized coordinates, when known."""


@dataclass
class MethodFit:
    density: WeightedDensity
    params: dict = field(default_factory=dict)


def derive_seed(*keys) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def make_split(train_raw, test_raw, density: MixtureDensity | None = None) -> Split:
    std = Standardizer.fit(train_raw)
    dens = None if density is None else StandardizedDensity(density, std)
    return Split(std.transform(train_raw), std.transform(test_raw), std, dens)


def synthetic_split(density: MixtureDensity, n_train: int, n_test: int, seed) -> Split:
    raw = density.sample(n_train + n_test, seed)
    return make_split(raw[:n_train], raw[n_train:], density)


def resampled_split(data, train_fraction: float, seed) -> Split:
    data = as_samples(data)
    n = data.shape[0]
    n_train = int(round(train_fraction * n))
    if not 2 <= n_train < n:
        raise ValueError(f"cannot split {n} rows with train fraction {train_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    return make_split(data[perm[:n_train]], data[perm[n_train:]])


def fit_method(method: str, tuning: str, train, seed: int, cv_draws: int = 100,
               solver: SolverSettings | None = None, overrides: dict | None = None) -> MethodFit:
    """Fit one estimator on standardized training data.

    ``overrides`` may pin ``sigma``, ``radius`` or ``sigma_gamma``; pinned
    values skip the corresponding rule of thumb (CV ignores them).
    """
    train = as_samples(train)
    n, d = train.shape
    solver = solver or SolverSettings()
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if tuning == "rot":
        sigma = overrides.get("sigma") or silverman_sigma(train)
        if method == "kde":
            return MethodFit(fit_kde(train, sigma), {"sigma": sigma})
        if method == "vkde":
            return MethodFit(fit_vkde(train, sigma), {"sigma": sigma})
        cfg = FitConfig(
            sigma=sigma,
            radius=overrides.get("radius") or radius_rule(n, d),
            sigma_gamma=overrides["sigma_gamma"] if "sigma_gamma" in overrides else gamma_rule(train),
            solver=solver,
            seed=seed,
        )
    elif tuning == "cv":
        plan = CvPlan.for_size(n, draws=cv_draws, seed=seed)
        cfg = cross_validate(train, plan, method, solver=solver).config
        if method == "kde":
            return MethodFit(fit_kde(train, cfg.sigma), {"sigma": cfg.sigma})
        if method == "vkde":
            return MethodFit(fit_vkde(train, cfg.sigma), {"sigma": cfg.sigma})
    else:
        raise ValueError(f"unknown tuning {tuning!r}")
    fit = fit_fbkde(train, cfg)
    params = {
        "sigma": cfg.sigma, "radius": cfg.radius, "sigma_gamma": cfg.sigma_gamma,
        "iterations": fit.solution.iterations, "converged": fit.solution.converged,
        "training_objective": fit.solution.objective,
    }
    return MethodFit(fit.density, params)


def score(est: WeightedDensity, split: Split, grid_points: int = 2001) -> dict:
    out = {"j_test": j_test(est, split.test), "sup_error": math.nan, "ise": math.nan,
           "l1_norm": est.l1_norm, "negative_weights": int(np.sum(est.weights < 0))}
    if split.density is not None and est.dim <= 2:
        grid = evaluation_grid(split.train, points=grid_points)
        out["sup_error"] = sup_error(est, split.density, grid)
        if est.dim == 1:
            out["ise"] = ise(est, split.density, float(grid[0]), float(grid[-1]))
    return out


def run_repetition(split: Split, methods, tunings, seed: int, cv_draws: int = 100,
                   grid_points: int = 2001, solver: SolverSettings | None = None) -> dict:
    """Score every (method, tuning) on one split; failures are recorded, not raised."""
    results = {}
    for tuning in tunings:
        for method in methods:
            try:
                mf = fit_method(method, tuning, split.train, seed, cv_draws, solver)
                results[(method, tuning)] = {**score(mf.density, split, grid_points), "params": mf.params}
            except Exception as exc:  # noqa: BLE001 - a failed cell must not abort the table
                log.warning("cell %s/%s failed: %s", method, tuning, exc)
                results[(method, tuning)] = {"error": f"{type(exc).__name__}: {exc}"}
    return results


def _summarize(values: list) -> dict:
    arr = np.array([v for v in values if v is not None and not math.isnan(v)], dtype=float)
    if arr.size == 0:
        return {"mean": math.nan, "std": math.nan, "count": 0}
    return {"mean": float(arr.mean()), "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
            "count": int(arr.size)}


def aggregate(per_rep: list, dataset: str, extra: dict | None = None) -> list:
    """Collapse per-repetition results into one row per (method, tuning)."""
    rows = []
    keys = []
    for rep in per_rep:
        for key in rep:
            if key not in keys:
                keys.append(key)
    for method, tuning in keys:
        cells = [rep.get((method, tuning), {}) for rep in per_rep]
        errors = [c["error"] for c in cells if "error" in c]
        row = {"dataset": dataset, "method": method, "tuning": tuning,
               "repeats": len(cells), "failed": len(errors), "errors": errors}
        if extra:
            row.update(extra)
        for metric in METRICS:
            vals = [c.get(metric, math.nan) for c in cells if "error" not in c]
            row[metric] = {**_summarize(vals), "values": vals}
        rows.append(row)
    return rows


def bench(datasets: list, methods=METHODS, tunings=TUNINGS, repeats: int = 20, seed: int = 0,
          n_total: int = 1000, train_fraction: float = 0.8, cv_draws: int = 100,
          grid_points: int = 2001, solver: SolverSettings | None = None) -> list:
    """Comparison table rows.

    ``datasets`` holds ``(name, source)`` pairs where ``source`` is a
    :class:`MixtureDensity` (fresh samples each repetition) or an array
    (random re-splits each repetition, no density-based errors).
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    rows = []
    for k, (name, source) in enumerate(datasets):
        per_rep = []
        for r in range(repeats):
            rep_seed = derive_seed(seed, k, r)
            if isinstance(source, MixtureDensity):
                n_train = int(round(train_fraction * n_total))
                split = synthetic_split(source, n_train, n_total - n_train, rep_seed)
            else:
                split = resampled_split(source, train_fraction, rep_seed)
            per_rep.append(run_repetition(split, methods, tunings, rep_seed, cv_draws, grid_points, solver))
        rows.extend(aggregate(per_rep, name, {"n_train": split.train.shape[0]}))
    return rows


def sweep(density: MixtureDensity, sizes=SWEEP_SIZES, methods=METHODS, repeats: int = 10,
          seed: int = 0, train_fraction: float = 0.8, grid_points: int = 2001,
          solver: SolverSettings | None = None) -> list:
    """Rule-of-thumb errors as the training size grows.

    Each size ``n`` is a training size; ``n (1 - f) / f`` test points are
    added. Repetition seeds match :func:`bench` with a single dataset, so
    a one-size sweep reproduces the corresponding bench rows.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    rows = []
    for n in sizes:
        n_test = max(1, int(round(n * (1.0 - train_fraction) / train_fraction)))
        per_rep = []
        for r in range(repeats):
            rep_seed = derive_seed(seed, 0, r)
            split = synthetic_split(density, n, n_test, rep_seed)
            per_rep.append(run_repetition(split, methods, ("rot",), rep_seed, grid_points=grid_points,
                                          solver=solver))
        rows.extend(aggregate(per_rep, density.name or "density", {"n_train": n}))
    return rows


def sweep_long_rows(rows: list) -> list:
    """Flatten sweep rows to (n, method, metric, mean, std) records."""
    out = []
    for row in rows:
        for metric in METRICS:
            out.append((row["n_train"], row["method"], metric, row[metric]["mean"], row[metric]["std"]))
    return out


def format_table(rows: list) -> str:
    """Aligned text rendering of bench/sweep rows (mean +- std)."""
    head = ["dataset", "n", "method", "tuning", "J_test", "sup_error", "ise", "failed"]
    body = []
    for row in rows:
        cells = [row["dataset"], str(row.get("n_train", "")), row["method"], row["tuning"]]
        for metric in METRICS:
            s = row[metric]
            cells.append("-" if s["count"] == 0 else f"{s['mean']:.4f} +- {s['std']:.4f}")
        cells.append(str(row["failed"]))
        body.append(cells)
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [head] + body]
    return "\n".join(lines) + "\n"


def plot_data(density: MixtureDensity | None, train_raw, seed: int, grid_points: int = 2001,
              solver: SolverSettings | None = None) -> tuple[list, list, list]:
    """Curves and stem data for a 1-D fit, in original data units.

    Returns ``(header, curve_rows, stem_rows)``; curve columns are x, the
    true pdf (omitted without a density), fbKDE, KDE and vKDE. Stem rows
    are (center, alpha) of the fbKDE.
    """
    train_raw = as_samples(train_raw)
    if train_raw.shape[1] != 1:
        raise ValueError("plot data is only produced for 1-D data")
    std = Standardizer.fit(train_raw)
    train = std.transform(train_raw)
    z = evaluation_grid(train, points=grid_points)
    fits = {m: fit_method(m, "rot", train, seed, solver=solver).density for m in METHODS}
    x = std.inverse_transform(z)[:, 0]
    scale = float(std.scale[0])
    cols = {m: fits[m].evaluate(z) / scale for m in METHODS}
    header = ["x"] + (["pdf"] if density is not None else []) + list(METHODS)
    pdf = density.pdf(x) if density is not None else None
    rows = []
    for i in range(x.shape[0]):
        row = [float(x[i])]
        if pdf is not None:
            row.append(float(pdf[i]))
        row.extend(float(cols[m][i]) for m in METHODS)
        rows.append(row)
    fb = fits["fbkde"]
    centers = std.inverse_transform(fb.centers)[:, 0]
    stems = [[float(c), float(a)] for c, a in zip(centers, fb.weights)]
    return header, rows, stems
