"""Ground-truth densities for the synthetic benchmarks.

Two families: isotropic Gaussian mixtures in any dimension, and the 1-D
triangular density. Besides sampling and exact evaluation, Gaussian
mixtures provide the closed-form expectation ``h(z) = E k(X, z)`` under a
Gaussian kernel, which the concentration checks compare against.

The named 1-D benchmark densities are fixed here:

=========== ==========================================================
bimodal     0.5 N(-1, 0.5^2) + 0.5 N(1, 0.1^2)
trimodal    0.45 N(-1.2, 0.4^2) + 0.45 N(1.2, 0.4^2) + 0.1 N(0, 0.15^2)
kurtotic    2/3 N(0, 1) + 1/3 N(0, 0.1^2)
triangular  triangular(-1, 0, 1)
=========== ==========================================================
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .kernels import Family, KernelSpec, as_points


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: tuple
    std: float


@dataclass(frozen=True)
class MixtureDensity:
    """Either an isotropic Gaussian mixture or a 1-D triangular density.

    Build with :meth:`gaussian_mixture` or :meth:`triangular`.
    """

    components: tuple = ()
    triangle: tuple | None = None
    name: str = ""

    def __post_init__(self):
        if (len(self.components) == 0) == (self.triangle is None):
            raise ValueError("give either Gaussian components or a triangle, not both")
        if self.triangle is not None:
            a, c, b = self.triangle
            if not a < c < b:
                raise ValueError(f"triangular density needs a < c < b, got {self.triangle}")
            return
        dims = {len(comp.mean) for comp in self.components}
        if len(dims) != 1:
            raise ValueError("mixture components have inconsistent dimensions")
        weights = np.array([comp.weight for comp in self.components])
        if np.any(weights <= 0) or np.any(weights > 1):
            raise ValueError("mixture weights must lie in (0, 1]")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {weights.sum()}, not 1")
        if any(not comp.std > 0 for comp in self.components):
            raise ValueError("component standard deviations must be positive")

    @classmethod
    def gaussian_mixture(cls, weights, means, stds, name: str = "") -> "MixtureDensity":
        comps = []
        for w, mu, s in zip(weights, means, stds):
            mu = tuple(float(v) for v in np.atleast_1d(mu))
            comps.append(GaussianComponent(float(w), mu, float(s)))
        return cls(components=tuple(comps), name=name)

    @classmethod
    def triangular(cls, a: float, c: float, b: float, name: str = "") -> "MixtureDensity":
        return cls(triangle=(float(a), float(c), float(b)), name=name)

    @property
    def dim(self) -> int:
        if self.triangle is not None:
            return 1
        return len(self.components[0].mean)

    @property
    def is_gaussian(self) -> bool:
        return self.triangle is None

    def _params(self):
        w = np.array([c.weight for c in self.components])
        mu = np.array([c.mean for c in self.components])
        s = np.array([c.std for c in self.components])
        return w, mu, s

    def pdf(self, x):
        """Density at ``x``; a float for a scalar input, else one value per point."""
        scalar = np.ndim(x) == 0
        pts = as_points(x, self.dim)
        if self.triangle is not None:
            a, c, b = self.triangle
            t = pts[:, 0]
            up = 2.0 * (t - a) / ((b - a) * (c - a))
            down = 2.0 * (b - t) / ((b - a) * (b - c))
            out = np.where(t <= c, up, down)
            out = np.where((t < a) | (t > b), 0.0, out)
        else:
            w, mu, s = self._params()
            d = self.dim
            sq = ((pts[:, None, :] - mu[None, :, :]) ** 2).sum(axis=2)
            out = ((2.0 * np.pi * s**2) ** (-d / 2.0) * np.exp(-sq / (2.0 * s**2))) @ w
        return float(out[0]) if scalar else out

    def cdf(self, x):
        """Distribution function, 1-D only."""
        if self.dim != 1:
            raise ValueError("cdf is only defined for 1-D densities")
        scalar = np.ndim(x) == 0
        t = np.asarray(x, dtype=float).reshape(-1)
        if self.triangle is not None:
            a, c, b = self.triangle
            lower = (t - a) ** 2 / ((b - a) * (c - a))
            upper = 1.0 - (b - t) ** 2 / ((b - a) * (b - c))
            out = np.where(t <= c, lower, upper)
            out = np.clip(np.where(t < a, 0.0, np.where(t > b, 1.0, out)), 0.0, 1.0)
        else:
            w, mu, s = self._params()
            out = ndtr((t[:, None] - mu[None, :, 0]) / s[None, :]) @ w
        return float(out[0]) if scalar else out

    def sample(self, n: int, seed=None) -> np.ndarray:
        """Draw ``n`` iid points as an (n, d) array; reproducible for a fixed seed."""
        if n < 1:
            raise ValueError("n must be at least 1")
        rng = np.random.default_rng(seed)
        if self.triangle is not None:
            a, c, b = self.triangle
            u = rng.random(n)
            split = (c - a) / (b - a)
            left = a + np.sqrt(u * (b - a) * (c - a))
            right = b - np.sqrt((1.0 - u) * (b - a) * (b - c))
            return np.where(u < split, left, right).reshape(n, 1)
        w, mu, s = self._params()
        which = rng.choice(len(w), size=n, p=w)
        noise = rng.standard_normal((n, self.dim))
        return mu[which] + s[which, None] * noise

    def squared_l2_norm(self) -> float:
        """Exact ``int f^2``."""
        if self.triangle is not None:
            a, _, b = self.triangle
            return 4.0 / (3.0 * (b - a))
        w, mu, s = self._params()
        d = self.dim
        var = s[:, None] ** 2 + s[None, :] ** 2
        sq = ((mu[:, None, :] - mu[None, :, :]) ** 2).sum(axis=2)
        cross = (2.0 * np.pi * var) ** (-d / 2.0) * np.exp(-sq / (2.0 * var))
        return float(w @ cross @ w)

    def rescaled(self, loc, scale) -> "MixtureDensity":
        """Density of ``(X - loc) / scale`` when X has this density.

        Gaussian mixtures stay isotropic only under a common scale, so a
        per-dimension ``scale`` must have equal entries.
        """
        d = self.dim
        loc = np.broadcast_to(np.asarray(loc, dtype=float), (d,))
        scale = np.broadcast_to(np.asarray(scale, dtype=float), (d,))
        if np.any(scale <= 0):
            raise ValueError("scale must be positive")
        if not np.allclose(scale, scale[0], rtol=0, atol=0):
            raise ValueError("rescaling an isotropic mixture needs one common scale")
        sc = float(scale[0])
        if self.triangle is not None:
            a, c, b = ((v - loc[0]) / sc for v in self.triangle)
            return MixtureDensity.triangular(a, c, b, name=self.name)
        w, mu, s = self._params()
        return MixtureDensity.gaussian_mixture(w, (mu - loc) / sc, s / sc, name=self.name)

    def support_range(self, pad: float = 10.0) -> tuple[float, float]:
        """A 1-D interval holding essentially all of the mass."""
        if self.triangle is not None:
            return self.triangle[0], self.triangle[2]
        _, mu, s = self._params()
        return float(mu[:, 0].min() - pad * s.max()), float(mu[:, 0].max() + pad * s.max())


def convolved_h(density: MixtureDensity, kernel: KernelSpec, z):
    """``h(z) = int k(x, z) f(x) dx`` for a Gaussian mixture and Gaussian kernel.

    Each component convolves to ``N(z; mu_m, (sigma^2 + s_m^2) I)``.
    """
    if not density.is_gaussian:
        raise ValueError("convolved_h needs a Gaussian mixture density")
    if kernel.family is not Family.GAUSSIAN:
        raise ValueError("convolved_h needs a Gaussian kernel")
    if kernel.dim != density.dim:
        raise ValueError("kernel and density dimensions differ")
    scalar = np.ndim(z) == 0
    pts = as_points(z, density.dim)
    w, mu, s = density._params()
    var = kernel.sigma**2 + s**2
    sq = ((pts[:, None, :] - mu[None, :, :]) ** 2).sum(axis=2)
    out = ((2.0 * np.pi * var) ** (-density.dim / 2.0) * np.exp(-sq / (2.0 * var))) @ w
    return float(out[0]) if scalar else out


BIMODAL = MixtureDensity.gaussian_mixture([0.5, 0.5], [-1.0, 1.0], [0.5, 0.1], name="bimodal")
TRIMODAL = MixtureDensity.gaussian_mixture(
    [0.45, 0.45, 0.1], [-1.2, 1.2, 0.0], [0.4, 0.4, 0.15], name="trimodal")
KURTOTIC = MixtureDensity.gaussian_mixture([2.0 / 3.0, 1.0 / 3.0], [0.0, 0.0], [1.0, 0.1], name="kurtotic")
TRIANGULAR = MixtureDensity.triangular(-1.0, 0.0, 1.0, name="triangular")

DENSITIES = {d.name: d for d in (BIMODAL, TRIMODAL, KURTOTIC, TRIANGULAR)}


def get_density(name: str) -> MixtureDensity:
    try:
        return DENSITIES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown density {name!r}; choose from {sorted(DENSITIES)}") from None


def standard_normal(dim: int = 1) -> MixtureDensity:
    return MixtureDensity.gaussian_mixture([1.0], [np.zeros(dim)], [1.0], name="normal")


def simpson_weights(points: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson on [lo, hi] (``points`` odd)."""
    if points < 3 or points % 2 == 0:
        raise ValueError("Simpson needs an odd number of points >= 3")
    x = np.linspace(lo, hi, points)
    step = (hi - lo) / (points - 1)
    w = np.ones(points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return x, w * step / 3.0
