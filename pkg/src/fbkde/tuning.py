"""Rules of thumb for (sigma, R_n, sigma_gamma) and random-search V-fold CV.

Data passed here is assumed standardized; the search box below is only
sensible in standardized units.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .estimator import FitConfig, WeightedDensity, fit_fbkde, fit_kde, fit_vkde
from .evaluation import j_test
from .kernels import as_samples
from .qp import SolverSettings


class EstimatorKind(str, enum.Enum):
    FBKDE = "fbkde"
    KDE = "kde"
    VKDE = "vkde"


@dataclass(frozen=True)
class ParamBox:
    """Log-spaced ranges for sigma, radius and sigma_gamma."""

    sigma_range: tuple
    radius_range: tuple
    gamma_range: tuple

    def __post_init__(self):
        for name in ("sigma_range", "radius_range", "gamma_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo < hi):
                raise ValueError(f"{name} must satisfy 0 < low < high, got ({lo}, {hi})")

    def contains(self, sigma: float, radius: float, sigma_gamma: float) -> bool:
        return all(lo <= v <= hi for v, (lo, hi) in
                   zip((sigma, radius, sigma_gamma), (self.sigma_range, self.radius_range, self.gamma_range)))


@dataclass(frozen=True)
class CvPlan:
    folds: int = 3
    draws: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.folds not in (2, 3):
            raise ValueError(f"folds must be 2 or 3, got {self.folds}")
        if self.draws < 1:
            raise ValueError("draws must be at least 1")

    @classmethod
    def for_size(cls, n: int, draws: int = 100, seed: int = 0) -> "CvPlan":
        return cls(folds=cv_folds(n), draws=draws, seed=seed)


@dataclass(frozen=True)
class CvResult:
    """Outcome of :func:`cross_validate`.

    ``table`` rows are ``(sigma, radius, sigma_gamma, mean_score,
    fold_scores)`` in candidate order; ``best_index`` points into it.
    """

    config: FitConfig
    best_index: int
    table: list = field(repr=False)


def cv_folds(n: int) -> int:
    return 2 if n > 1000 else 3


def silverman_sigma(data) -> float:
    """Normal-reference bandwidth ``s * (4 / ((d + 2) n))^(1 / (d + 4))``.

    ``s`` is the mean of the per-dimension sample standard deviations.
    """
    data = as_samples(data)
    n, d = data.shape
    if n < 2:
        raise ValueError("Silverman's rule needs n >= 2")
    spread = float(data.std(axis=0, ddof=1).mean())
    if not spread > 0:
        raise ValueError("data has zero spread")
    return spread * (4.0 / ((d + 2.0) * n)) ** (1.0 / (d + 4.0))


def radius_rule(n: int, d: int) -> float:
    """``(n / log n)^(1/3)`` for d <= 4, ``(n / log n)^(1/2 - 2/d)`` above."""
    if n <= 2:
        raise ValueError("radius rule needs n >= 3")
    if d < 1:
        raise ValueError("d must be positive")
    exponent = 1.0 / 3.0 if d <= 4 else 0.5 - 2.0 / d
    return (n / math.log(n)) ** exponent


def gamma_rule(data) -> float:
    """Median distance from each point to its 5th nearest other point."""
    data = as_samples(data)
    if data.shape[0] < 6:
        raise ValueError("5th-neighbor rule needs n >= 6")
    # the 6 smallest distances include the zero self-distance exactly once
    dist, _ = cKDTree(data).query(data, k=6)
    return float(np.median(dist[:, 5]))


def theta_box(n: int, d: int) -> ParamBox:
    if n < 2:
        raise ValueError("n must be at least 2")
    if d <= 4:
        return ParamBox((0.1, 0.5), (1.1, 2.0 * math.sqrt(n)), (0.001, 0.1))
    return ParamBox((0.1, 1.0), (1.1, 2.0 * n ** (0.5 - 2.0 / d)), (0.001, 0.1))


def rule_of_thumb(data, solver: SolverSettings | None = None, seed: int = 0) -> FitConfig:
    data = as_samples(data)
    n, d = data.shape
    return FitConfig(
        sigma=silverman_sigma(data),
        radius=radius_rule(n, d),
        sigma_gamma=gamma_rule(data),
        solver=solver or SolverSettings(),
        seed=seed,
    )


def sample_params(box: ParamBox, count: int, seed=None) -> np.ndarray:
    """``count`` rows of (sigma, radius, sigma_gamma), log-uniform per coordinate."""
    rng = np.random.default_rng(seed)
    lows = np.log([box.sigma_range[0], box.radius_range[0], box.gamma_range[0]])
    highs = np.log([box.sigma_range[1], box.radius_range[1], box.gamma_range[1]])
    out = np.exp(rng.uniform(lows, highs, size=(count, 3)))
    # exp(log(x)) can drift by an ulp past the bounds
    return np.clip(out, np.exp(lows), np.exp(highs))


def fold_assignment(n: int, folds: int, seed=None) -> np.ndarray:
    """Random partition of range(n) into ``folds`` near-equal groups."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % folds
    return labels[rng.permutation(n)]


def _fit(kind: EstimatorKind, train, sigma, radius, sigma_gamma, solver, seed) -> WeightedDensity:
    if kind is EstimatorKind.KDE:
        return fit_kde(train, sigma)
    if kind is EstimatorKind.VKDE:
        return fit_vkde(train, sigma)
    cfg = FitConfig(sigma=sigma, radius=radius, sigma_gamma=sigma_gamma, solver=solver, seed=seed)
    return fit_fbkde(train, cfg).density


def cross_validate(data, plan: CvPlan, kind="fbkde", candidates=None,
                   solver: SolverSettings | None = None) -> CvResult:
    """Pick hyperparameters by V-fold CV over random draws from the search box.

    Each candidate is scored by the held-out criterion of
    :func:`fbkde.evaluation.j_test` averaged over folds. KDE and vKDE only
    use the sigma coordinate.

    Jitter for fold ``v`` is seeded from ``(plan.seed, v)`` alone, so every
    candidate sees the same noise and the result does not depend on the
    order of ``candidates``. Ties in mean score go to the lexicographically
    smallest ``(sigma, radius, sigma_gamma)``.
    """
    kind = EstimatorKind(kind)
    data = as_samples(data)
    n, d = data.shape
    solver = solver or SolverSettings()
    if candidates is None:
        candidates = sample_params(theta_box(n, d), plan.draws,
                                   np.random.SeedSequence([plan.seed, 0]))
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[1] != 3:
        raise ValueError("candidates must be rows of (sigma, radius, sigma_gamma)")

    labels = fold_assignment(n, plan.folds, np.random.SeedSequence([plan.seed, 1]))
    for v in range(plan.folds):
        if np.count_nonzero(labels != v) < 2:
            raise ValueError(f"fold {v} leaves fewer than 2 training points")
        if np.count_nonzero(labels == v) < 1:
            raise ValueError(f"fold {v} has no validation points")
    fold_seeds = [int(np.random.SeedSequence([plan.seed, 2, v]).generate_state(1)[0])
                  for v in range(plan.folds)]

    table = []
    for sigma, radius, gamma in candidates:
        scores = []
        for v in range(plan.folds):
            train, val = data[labels != v], data[labels == v]
            est = _fit(kind, train, sigma, radius, gamma, solver, fold_seeds[v])
            scores.append(j_test(est, val))
        table.append((float(sigma), float(radius), float(gamma), float(np.mean(scores)), tuple(scores)))

    best = min(range(len(table)), key=lambda i: (table[i][3], table[i][:3]))
    sigma, radius, gamma = table[best][:3]
    if kind is not EstimatorKind.FBKDE:
        # only sigma was tuned; keep the remaining fields well-defined
        radius, gamma = 1.0, 0.0
    config = FitConfig(sigma=sigma, radius=radius, sigma_gamma=gamma, solver=solver, seed=plan.seed)
    return CvResult(config=config, best_index=best, table=table)
