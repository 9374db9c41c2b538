"""Weighted kernel density estimators: fbKDE, standard KDE and vKDE.

All three produce a :class:`WeightedDensity`, a finite signed sum of
kernels ``f(x) = sum_i alpha_i k_{sigma_i}(x, z_i)``. Only the fbKDE has
learned weights; these may be negative and the result is not clipped or
renormalized.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import Family, KernelSpec, as_points, as_samples, gram_matrix, kernel_matrix
from .qp import QpProblem, QpSolution, SolverSettings, solve_qp


@dataclass(frozen=True)
class WeightedDensity:
    kernel: KernelSpec
    centers: np.ndarray
    weights: np.ndarray
    per_center_sigma: np.ndarray | None = None

    def __post_init__(self):
        centers = as_points(self.centers, self.kernel.dim).copy()
        weights = np.asarray(self.weights, dtype=float).reshape(-1).copy()
        if centers.shape[0] != weights.shape[0]:
            raise ValueError(f"{centers.shape[0]} centers but {weights.shape[0]} weights")
        centers.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "weights", weights)
        if self.per_center_sigma is not None:
            sig = np.asarray(self.per_center_sigma, dtype=float).reshape(-1).copy()
            if sig.shape[0] != weights.shape[0]:
                raise ValueError("per_center_sigma must have one entry per center")
            if np.any(~(sig > 0)):
                raise ValueError("per-center bandwidths must be positive")
            sig.flags.writeable = False
            object.__setattr__(self, "per_center_sigma", sig)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.kernel.dim

    @property
    def l1_norm(self) -> float:
        return float(np.abs(self.weights).sum())

    def evaluate(self, x):
        return density_eval(self, x)

    __call__ = evaluate

    def gram(self) -> np.ndarray:
        """Cross-integral matrix of the kernels, so ``int f^2 = w' G w``."""
        return gram_matrix(self.kernel, self.centers, self.per_center_sigma)

    def squared_l2_norm(self) -> float:
        return float(self.weights @ self.gram() @ self.weights)


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters for one fbKDE fit.

    ``sigma_gamma`` is the per-coordinate standard deviation of the
    Gaussian jitter added to the data to form the kernel centers.
    """

    sigma: float
    radius: float
    sigma_gamma: float = 0.0
    solver: SolverSettings = field(default_factory=SolverSettings)
    seed: int = 0
    family: Family = Family.GAUSSIAN

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not self.sigma_gamma >= 0:
            raise ValueError(f"sigma_gamma must be nonnegative, got {self.sigma_gamma}")
        object.__setattr__(self, "family", Family(self.family))


@dataclass(frozen=True)
class FbkdeFit:
    density: WeightedDensity
    solution: QpSolution
    problem: QpProblem

    @property
    def training_objective(self) -> float:
        return self.solution.objective


@dataclass(frozen=True)
class Standardizer:
    """Per-dimension z-scoring with statistics from the training data."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, data) -> "Standardizer":
        data = as_samples(data)
        if data.shape[0] < 2:
            raise ValueError("standardization needs at least two points")
        scale = data.std(axis=0, ddof=1)
        if np.any(scale <= 0):
            raise ValueError("cannot standardize a constant column")
        return cls(data.mean(axis=0), scale)

    @property
    def jacobian(self) -> float:
        """Density factor: ``f_std(z) = jacobian * f(mean + scale * z)``."""
        return float(np.prod(self.scale))

    def transform(self, data) -> np.ndarray:
        return (as_points(as_samples(data), self.mean.shape[0]) - self.mean) / self.scale

    def inverse_transform(self, data) -> np.ndarray:
        return as_points(as_samples(data), self.mean.shape[0]) * self.scale + self.mean


def standardize(data) -> tuple[np.ndarray, Standardizer]:
    std = Standardizer.fit(data)
    return std.transform(data), std


def jitter_centers(data, sigma_gamma: float, seed=None) -> np.ndarray:
    """Kernel centers ``Z_i = X_i + Gamma_i`` with spherical Gaussian jitter."""
    if not sigma_gamma >= 0:
        raise ValueError(f"sigma_gamma must be nonnegative, got {sigma_gamma}")
    data = as_samples(data)
    if sigma_gamma == 0:
        return data.copy()
    rng = np.random.default_rng(seed)
    return data + sigma_gamma * rng.standard_normal(data.shape)


def loo_h(kernel: KernelSpec, data, centers) -> np.ndarray:
    """Leave-one-out estimates ``h_i = 1/(n-1) sum_{j != i} k(X_j, Z_i)``."""
    data = as_points(as_samples(data), kernel.dim)
    centers = as_points(as_samples(centers), kernel.dim)
    n = data.shape[0]
    if centers.shape[0] != n:
        raise ValueError("data and centers must have the same length")
    if n < 2:
        raise ValueError("leave-one-out estimate needs n >= 2")
    K = kernel_matrix(kernel, data, centers)
    np.fill_diagonal(K, 0.0)
    return K.sum(axis=0) / (n - 1)


def fit_fbkde(data, config: FitConfig) -> FbkdeFit:
    """Fit the fixed-bandwidth KDE.

    Centers are the jittered data; the weights minimize
    ``a'Ga - 2 h'a`` over ``||a||_1 <= config.radius`` where G holds the
    kernel cross-integrals and h the leave-one-out terms.
    """
    data = as_samples(data)
    if data.shape[0] < 2:
        raise ValueError("fbKDE needs at least two data points")
    kernel = KernelSpec(config.family, config.sigma, data.shape[1])
    centers = jitter_centers(data, config.sigma_gamma, config.seed)
    problem = QpProblem(gram_matrix(kernel, centers), loo_h(kernel, data, centers), config.radius)
    solution = solve_qp(problem, config.solver)
    return FbkdeFit(WeightedDensity(kernel, centers, solution.alpha), solution, problem)


def fit_kde(data, sigma: float, family=Family.GAUSSIAN) -> WeightedDensity:
    data = as_samples(data)
    n = data.shape[0]
    if n < 1:
        raise ValueError("KDE needs at least one data point")
    return WeightedDensity(KernelSpec(family, sigma, data.shape[1]), data, np.full(n, 1.0 / n))


def fit_vkde(data, sigma: float, family=Family.GAUSSIAN) -> WeightedDensity:
    """Variable-bandwidth KDE.

    Each point gets ``sigma_i = sigma * sqrt(lam / p_i)`` where ``p_i`` is a
    pilot KDE (bandwidth ``sigma``) at ``X_i`` and ``lam`` is the geometric
    mean of the pilot values, computed in log space.
    """
    pilot = fit_kde(data, sigma, family)
    p = density_eval(pilot, pilot.centers)
    if np.any(~(np.isfinite(p) & (p > 0))):
        raise ValueError("pilot density is not finite and positive at every data point")
    log_p = np.log(p)
    log_lam = log_p.mean()
    sig = sigma * np.exp(0.5 * (log_lam - log_p))
    return WeightedDensity(pilot.kernel, pilot.centers, pilot.weights, per_center_sigma=sig)


def density_eval(est: WeightedDensity, x):
    """Estimator value at ``x``: a float for one point, else one value per point.

    A 1-D array is read as one point when d > 1 and as many points when
    d = 1. Values of a signed estimator can be negative.
    """
    single = np.ndim(x) == 0 or (np.ndim(x) == 1 and est.dim > 1)
    pts = as_points(x, est.dim)
    out = kernel_matrix(est.kernel, pts, est.centers, est.per_center_sigma) @ est.weights
    return float(out[0]) if single else out
