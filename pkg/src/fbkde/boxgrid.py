"""Box kernels on a uniform grid over [0, 1]^d.

With ``sigma = 1/(2q)`` and ``(mq)^d`` cells of side ``1/(mq)``, the box
kernel at grid center ``y_i`` covers exactly the block of ``m^d`` cells
starting at cell ``i``. Any piecewise-constant function on the cells is
therefore a signed sum of grid kernels, and :func:`box_beta` finds the
coefficients by sweeping the cells in flat-index order.

Indices follow the 1-based convention ``i = 1 + sum_l (iota_l - 1)(mq)^(l-1)``
so the first coordinate varies fastest.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .estimator import FbkdeFit, FitConfig, WeightedDensity
from .kernels import Family, KernelSpec, as_points, as_samples, gram_matrix, kernel_matrix
from .qp import QpProblem, solve_qp


def flat_index(iota, mq: int) -> int:
    iota = tuple(int(v) for v in iota)
    if any(not 1 <= v <= mq for v in iota):
        raise ValueError(f"multi-index {iota} out of range 1..{mq}")
    return 1 + sum((v - 1) * mq**ell for ell, v in enumerate(iota))


def multi_index(i: int, mq: int, d: int) -> tuple:
    if not 1 <= i <= mq**d:
        raise ValueError(f"flat index {i} out of range 1..{mq**d}")
    return tuple(((i - 1) // mq**ell) % mq + 1 for ell in range(d))


@dataclass(frozen=True)
class BoxGrid:
    q: int
    m: int
    d: int

    def __post_init__(self):
        for name in ("q", "m", "d"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")

    @property
    def sigma(self) -> float:
        return 1.0 / (2 * self.q)

    @property
    def mq(self) -> int:
        return self.m * self.q

    @property
    def size(self) -> int:
        return self.mq**self.d

    @property
    def kernel(self) -> KernelSpec:
        return KernelSpec(Family.BOX, self.sigma, self.d)

    def multi_indices(self) -> np.ndarray:
        """All multi-indices in flat order, shape (size, d)."""
        # itertools.product varies the last entry fastest; reverse it
        rows = itertools.product(range(1, self.mq + 1), repeat=self.d)
        return np.array([r[::-1] for r in rows], dtype=int)

    def centers(self) -> np.ndarray:
        return (self.multi_indices() - 1) / self.mq + self.sigma

    def anchors(self) -> np.ndarray:
        """The point ``iota / (mq)`` of each cell, where f is sampled."""
        return self.multi_indices() / self.mq

    def cell_of(self, x) -> np.ndarray:
        """Flat index of the cell holding each point of [0, 1]^d.

        A point on a shared face belongs to the lowest-index cell.
        """
        pts = as_points(x, self.d)
        iota = np.clip(np.ceil(pts * self.mq).astype(int), 1, self.mq)
        return 1 + (iota - 1) @ (self.mq ** np.arange(self.d))


@dataclass(frozen=True)
class BoxBeta:
    grid: BoxGrid
    beta: np.ndarray
    l1_bound: float | None = None

    def reconstruct(self, x) -> np.ndarray:
        """``f_m(x) = sum_i beta_i (2 sigma)^d k(x, y_i)``."""
        g = self.grid
        K = kernel_matrix(g.kernel, as_points(x, g.d), g.centers())
        return (K @ self.beta) * (2.0 * g.sigma) ** g.d


def _values(f, pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(f(pts), dtype=float).reshape(-1)
    if vals.shape[0] != pts.shape[0]:
        raise ValueError("f must return one value per input point")
    if not np.all(np.isfinite(vals)):
        raise ValueError("f returned non-finite values")
    return vals


def box_beta(f, q: int, m: int, d: int, lipschitz: float | None = None) -> BoxBeta:
    """Coefficients reproducing ``sum_i f(iota_i / mq) 1{T_i}`` with grid box kernels.

    ``f`` maps an (k, d) array to k values. Sweeping cells in flat order,
    ``beta_i = f(xbar_i) - sum of beta_j`` over the other kernels covering
    cell i, i.e. over multi-indices j with ``max(1, iota_i - m + 1) <= j <= iota_i``,
    ``j != iota_i``. When ``lipschitz`` is given the returned ``l1_bound``
    is ``(mq)^(d-1) ((q+1)/2)^2 (q f(0) + L sqrt(d))``.
    """
    grid = BoxGrid(q, m, d)
    mq = grid.mq
    target = _values(f, grid.anchors())
    # arrays indexed [iota_1 - 1, ..., iota_d - 1]; Fortran order matches flat order
    F = target.reshape((mq,) * d, order="F")
    B = np.zeros_like(F)
    for i in range(1, grid.size + 1):
        iota = multi_index(i, mq, d)
        window = tuple(slice(max(1, v - m + 1) - 1, v) for v in iota)
        pos = tuple(v - 1 for v in iota)
        B[pos] = F[pos] - B[window].sum()
    beta = B.reshape(-1, order="F")

    bound = None
    if lipschitz is not None:
        f0 = float(_values(f, np.zeros((1, d)))[0])
        bound = mq ** (d - 1) * ((q + 1) / 2.0) ** 2 * (q * f0 + lipschitz * math.sqrt(d))
    return BoxBeta(grid, beta, bound)


def _cell_quadrature(grid: BoxGrid, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre nodes and weights, ``nodes`` per axis per cell."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    h = 1.0 / grid.mq
    x1 = ((np.arange(grid.mq)[:, None] + (t[None, :] + 1.0) / 2.0) * h).ravel()
    w1 = np.tile(w * h / 2.0, grid.mq)
    mesh = np.meshgrid(*([x1] * grid.d), indexing="ij")
    wts = np.meshgrid(*([w1] * grid.d), indexing="ij")
    pts = np.column_stack([g.ravel() for g in mesh])
    return pts, np.prod(np.column_stack([g.ravel() for g in wts]), axis=1)


def box_approx_error(f, lipschitz: float, q: int, m: int, d: int, nodes: int = 8) -> tuple[float, float]:
    """Measured ``||f - f_m||_2`` on [0, 1]^d and the bound ``L sqrt(d) / (mq)``.

    ``f_m`` is evaluated through the kernel sum, not the step function, so
    this also exercises the reconstruction. Quadrature nodes are interior
    to the cells.
    """
    if d > 2:
        raise ValueError("quadrature is only provided for d <= 2")
    bb = box_beta(f, q, m, d, lipschitz)
    pts, wts = _cell_quadrature(bb.grid, nodes)
    diff = _values(f, pts) - bb.reconstruct(pts)
    measured = math.sqrt(max(float(wts @ diff**2), 0.0))
    return measured, lipschitz * math.sqrt(d) / bb.grid.mq


def fit_box_fbkde(data, q: int, m: int, config: FitConfig, outside: str = "reject") -> FbkdeFit:
    """fbKDE with box kernels at the ``(mq)^d`` grid centers.

    Only ``config.radius`` and ``config.solver`` are used; the bandwidth is
    ``1/(2q)``. The centers do not depend on the data, so the cross term is
    the plain average ``h_i = mean_j k(X_j, y_i)``. Points outside
    [0, 1]^d raise unless ``outside="clamp"``.
    """
    data = as_samples(data)
    n, d = data.shape
    if n < 1:
        raise ValueError("need at least one data point")
    if outside not in ("reject", "clamp"):
        raise ValueError("outside must be 'reject' or 'clamp'")
    bad = np.any((data < 0) | (data > 1), axis=1)
    if np.any(bad):
        if outside == "reject":
            raise ValueError(f"{int(bad.sum())} data points lie outside [0, 1]^{d}")
        data = np.clip(data, 0.0, 1.0)
    grid = BoxGrid(q, m, d)
    kernel = grid.kernel
    centers = grid.centers()
    h = kernel_matrix(kernel, data, centers).mean(axis=0)
    problem = QpProblem(gram_matrix(kernel, centers), h, config.radius)
    solution = solve_qp(problem, config.solver)
    return FbkdeFit(WeightedDensity(kernel, centers, solution.alpha), solution, problem)
