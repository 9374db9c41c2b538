"""Error measures for fitted estimators.

``j_test`` needs only held-out points; ``sup_error`` and ``ise`` need the
true density and are meant for the synthetic benchmarks.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .estimator import WeightedDensity, density_eval
from .kernels import as_points, as_samples, kernel_matrix
from .synthetic import simpson_weights


@dataclass(frozen=True)
class EvalReport:
    j_test: float
    hoeffding_bound: float
    n_train: int
    n_test: int
    sup_error: float | None = None
    ise: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def j_test(est: WeightedDensity, test_points) -> float:
    """Held-out L2 criterion ``int f^2 - 2 mean_l f(x_l)``; lower is better.

    The first term is exact (kernel cross-integrals), the second a plain
    average over the test points.
    """
    test = as_points(as_samples(test_points), est.dim)
    if test.shape[0] == 0:
        raise ValueError("test set is empty")
    w = est.weights
    K = kernel_matrix(est.kernel, test, est.centers, est.per_center_sigma)
    return float(w @ est.gram() @ w - 2.0 * w @ K.mean(axis=0))


def evaluation_grid(data, pad: float = 4.0, points: int = 2001) -> np.ndarray:
    """Uniform grid over the data range widened by ``pad`` on each side.

    Returns shape (points,) for 1-D data and (points**2, 2) for 2-D data.
    """
    data = as_samples(data)
    d = data.shape[1]
    if d > 2:
        raise ValueError("grid evaluation supports d <= 2")
    axes = [np.linspace(data[:, k].min() - pad, data[:, k].max() + pad, points) for k in range(d)]
    if d == 1:
        return axes[0]
    gx, gy = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _eval_chunked(est: WeightedDensity, pts: np.ndarray, chunk: int = 20000) -> np.ndarray:
    return np.concatenate([density_eval(est, pts[i:i + chunk]) for i in range(0, pts.shape[0], chunk)])


def sup_error(est: WeightedDensity, density, grid) -> float:
    """``max |f - f_est|`` over the grid points. ``density`` needs a ``pdf`` method."""
    if est.dim > 2:
        raise ValueError("sup_error supports d <= 2")
    pts = as_points(grid, est.dim)
    return float(np.max(np.abs(density.pdf(pts) - _eval_chunked(est, pts))))


def ise(est: WeightedDensity, density, lo: float, hi: float, points: int = 8001) -> float:
    """Integrated squared error on [lo, hi] by composite Simpson (1-D only)."""
    if est.dim != 1:
        raise ValueError("ise supports d = 1 only")
    x, w = simpson_weights(points, lo, hi)
    diff = density.pdf(x) - _eval_chunked(est, x)
    return float(max(w @ diff**2, 0.0))


def hoeffding_bound(n: int, radius: float, c_k: float, delta: float) -> float:
    """Deviation level eps solving ``delta = 2n exp(-(n-1) eps^2 / (8 C_k^2 R^2))``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if radius < 0 or c_k < 0:
        raise ValueError("radius and C_k must be nonnegative")
    return math.sqrt(8.0 * c_k**2 * radius**2 * math.log(2.0 * n / delta) / (n - 1))


def evaluate(est: WeightedDensity, test_points, n_train: int, radius: float,
             density=None, grid=None, delta: float = 0.05) -> EvalReport:
    """Build an :class:`EvalReport`; density-based errors only if ``density`` is given.

    ``density`` and ``grid`` must be in the same coordinates as ``est``.
    """
    test = as_samples(test_points)
    sup = err = None
    if density is not None:
        if grid is None:
            grid = evaluation_grid(test)
        sup = sup_error(est, density, grid)
        if est.dim == 1:
            g = np.asarray(grid, dtype=float).reshape(-1)
            err = ise(est, density, float(g.min()), float(g.max()))
    return EvalReport(
        j_test=j_test(est, test),
        hoeffding_bound=hoeffding_bound(n_train, radius, est.kernel.c_k, delta) if n_train >= 2 else math.nan,
        n_train=int(n_train),
        n_test=int(test.shape[0]),
        sup_error=sup,
        ise=err,
    )
