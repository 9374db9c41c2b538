"""Gaussian and box kernels, pointwise and as L2 cross-integrals.

All kernels are normalized densities in their first argument. The
cross-integral of two kernels is taken over all of R^d with Lebesgue
measure, which for the Gaussian family reduces to a Gaussian kernel with
bandwidth ``sqrt(2) * sigma``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    BOX = "box"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, bandwidth and dimension.

    ``sigma`` is in data units. For the box kernel it is the half-width of
    the support cube, so ``k(x, y) = (2 sigma)^-d`` when
    ``max|x - y| <= sigma``.
    """

    family: Family
    sigma: float
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "sigma", float(self.sigma))
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def c_k(self) -> float:
        """Uniform bound on the kernel, attained on the diagonal."""
        if self.family is Family.GAUSSIAN:
            return (2.0 * math.pi * self.sigma**2) ** (-self.dim / 2.0)
        return (2.0 * self.sigma) ** (-self.dim)

    @property
    def lipschitz(self) -> float:
        """Smallest L with ||k(., x) - k(., y)||_2 <= L ||x - y||_2.

        For the Gaussian the supremum is the small-distance limit. The box
        kernel is not Lipschitz in this sense (the L2 distance grows like
        the square root of the offset), so ``inf`` is returned.
        """
        if self.family is Family.GAUSSIAN:
            peak = (4.0 * math.pi * self.sigma**2) ** (-self.dim / 2.0)
            return math.sqrt(peak / (2.0 * self.sigma**2))
        return math.inf

    def with_sigma(self, sigma: float) -> "KernelSpec":
        return KernelSpec(self.family, sigma, self.dim)


def as_points(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a float array of shape (m, d).

    A 1-D input is read as a single point when ``dim`` matches its length
    (or ``dim`` is None), and as m scalar points when ``dim == 1``.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        if dim == 1:
            arr = arr.reshape(-1, 1)
        else:
            arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ValueError(f"points must be at most 2-D, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"dimension mismatch: expected d={dim}, got d={arr.shape[1]}")
    return arr


def as_samples(data) -> np.ndarray:
    """Coerce a data set to shape (n, d); a 1-D array is n scalar samples."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"data must be 1-D or 2-D, got shape {arr.shape}")
    return arr


def _as_point(x, dim: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected a point of length {dim}, got shape {arr.shape}")
    return arr


def _bandwidths(sigma, count: int, default: float) -> np.ndarray:
    if sigma is None:
        return np.full(count, default)
    out = np.asarray(sigma, dtype=float).reshape(-1)
    if out.shape[0] == 1:
        return np.full(count, out[0])
    if out.shape[0] != count:
        raise ValueError(f"expected {count} bandwidths, got {out.shape[0]}")
    return out


def _gaussian(sq_dist: np.ndarray, var: np.ndarray, dim: int) -> np.ndarray:
    # var is the kernel variance, broadcast against sq_dist
    return (2.0 * np.pi * var) ** (-dim / 2.0) * np.exp(-sq_dist / (2.0 * var))


def kernel_matrix(spec: KernelSpec, x, centers, center_sigma=None) -> np.ndarray:
    """Matrix ``K[l, i] = k_{sigma_i}(x_l, centers_i)``.

    ``center_sigma`` optionally gives one bandwidth per center (variable
    bandwidth estimators); otherwise ``spec.sigma`` is used throughout.
    """
    d = spec.dim
    x = as_points(x, d)
    centers = as_points(centers, d)
    sig = _bandwidths(center_sigma, centers.shape[0], spec.sigma)
    if spec.family is Family.GAUSSIAN:
        sq = cdist(x, centers, "sqeuclidean")
        return _gaussian(sq, (sig**2)[None, :], d)
    cheb = cdist(x, centers, "chebyshev")
    return np.where(cheb <= sig[None, :], (2.0 * sig[None, :]) ** (-d), 0.0)


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Kernel value ``k(x, y)`` for two points of dimension ``spec.dim``."""
    x = _as_point(x, spec.dim)
    y = _as_point(y, spec.dim)
    if spec.family is Family.GAUSSIAN:
        sq = float(np.sum((x - y) ** 2))
        return spec.c_k * math.exp(-sq / (2.0 * spec.sigma**2))
    return spec.c_k if float(np.max(np.abs(x - y))) <= spec.sigma else 0.0


def cross_matrix(spec: KernelSpec, a, b, sigma_a=None, sigma_b=None) -> np.ndarray:
    """Matrix of ``int k_{sa_i}(x, a_i) k_{sb_j}(x, b_j) dx`` over R^d.

    Gaussian: a Gaussian in ``a_i - b_j`` with variance ``sa_i^2 + sb_j^2``.
    Box: the overlap volume of the two support cubes divided by the
    product of their volumes.
    """
    d = spec.dim
    a = as_points(a, d)
    b = as_points(b, d)
    sa = _bandwidths(sigma_a, a.shape[0], spec.sigma)
    sb = _bandwidths(sigma_b, b.shape[0], spec.sigma)
    if spec.family is Family.GAUSSIAN:
        sq = cdist(a, b, "sqeuclidean")
        return _gaussian(sq, sa[:, None] ** 2 + sb[None, :] ** 2, d)
    out = np.ones((a.shape[0], b.shape[0]))
    for ell in range(d):
        lo = np.maximum((a[:, ell] - sa)[:, None], (b[:, ell] - sb)[None, :])
        hi = np.minimum((a[:, ell] + sa)[:, None], (b[:, ell] + sb)[None, :])
        out *= np.maximum(hi - lo, 0.0)
    return out * (2.0 * sa[:, None]) ** (-d) * (2.0 * sb[None, :]) ** (-d)


def cross_integral(spec: KernelSpec, a, b) -> float:
    """``int k(x, a) k(x, b) dx`` over R^d for two points."""
    a = _as_point(a, spec.dim)
    b = _as_point(b, spec.dim)
    return float(cross_matrix(spec, a[None, :], b[None, :])[0, 0])


def gram_matrix(spec: KernelSpec, centers, center_sigma=None) -> np.ndarray:
    """Symmetric matrix of pairwise cross-integrals between kernel centers."""
    centers = as_points(centers, spec.dim)
    if centers.shape[0] == 0:
        raise ValueError("gram_matrix needs at least one center")
    g = cross_matrix(spec, centers, centers, center_sigma, center_sigma)
    # exact symmetry; cdist already is, this guards the box product order
    return 0.5 * (g + g.T)
