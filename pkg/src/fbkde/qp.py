"""ADMM for min a'Ga - 2h'a subject to ||a||_1 <= R."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class QpProblem:
    G: np.ndarray
    h: np.ndarray
    radius: float

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float)
        h = np.asarray(self.h, dtype=float).reshape(-1)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ValueError(f"G must be square, got shape {G.shape}")
        if G.shape[0] != h.shape[0]:
            raise ValueError(f"G is {G.shape[0]}x{G.shape[0]} but h has length {h.shape[0]}")
        scale = max(float(np.max(np.abs(G))), np.finfo(float).tiny) if G.size else 1.0
        if G.size and float(np.max(np.abs(G - G.T))) > 1e-12 * scale:
            raise ValueError("G is not symmetric")
        if not (self.radius > 0):
            raise ValueError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def size(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class SolverSettings:
    """ADMM settings.

    ``rho`` is the initial penalty. With ``adaptive_rho`` the penalty is
    rebalanced every ``adapt_every`` iterations whenever the primal and
    dual residuals differ by more than ``adapt_mu``; the x-update
    factorization is an eigendecomposition so this costs nothing.
    """

    rho: float = 1.0
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    max_iters: int = 10000
    adaptive_rho: bool = True
    adapt_mu: float = 10.0
    adapt_tau: float = 2.0
    adapt_every: int = 10

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise ValueError("tolerances must be positive")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")


@dataclass(frozen=True)
class QpSolution:
    alpha: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    objective: float
    rho: float
    history: tuple = field(default=(), repr=False)


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{w : ||w||_1 <= radius}``.

    Sort-based soft thresholding. Returns ``v`` unchanged (as a copy) when
    it is already inside the ball.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    v = np.asarray(v, dtype=float)
    mag = np.abs(v)
    if mag.sum() <= radius:
        return v.copy()
    u = np.sort(mag.ravel(), kind="stable")[::-1]
    excess = np.cumsum(u) - radius
    k = np.arange(1, u.size + 1)
    # last index where the sorted entry survives thresholding
    rho = np.nonzero(u * k > excess)[0][-1]
    theta = excess[rho] / (rho + 1.0)
    w = np.maximum(mag - theta, 0.0)
    # cumsum - radius cancels when ||v||_1 >> radius; one correction step
    # on the active set restores ||w||_1 = radius to working precision
    active = w > 0
    theta += (w.sum() - radius) / max(int(active.sum()), 1)
    w = np.maximum(mag - theta, 0.0)
    total = w.sum()
    if total > radius:
        # leftover roundoff when radius << ||v||_inf; shrink onto the sphere
        w *= radius / total
    return np.sign(v) * w


def qp_objective(problem: QpProblem, alpha) -> float:
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    if alpha.shape[0] != problem.size:
        raise ValueError(f"alpha has length {alpha.shape[0]}, problem has size {problem.size}")
    return float(alpha @ problem.G @ alpha - 2.0 * problem.h @ alpha)


class _EigSolver:
    """Solves (2G + rho I) x = b for any rho from one eigendecomposition."""

    def __init__(self, G: np.ndarray):
        self.lam, self.Q = np.linalg.eigh(G)
        # G is PSD up to roundoff; anything this negative is not
        floor = -1e-8 * max(1.0, float(np.max(np.abs(self.lam), initial=0.0)))
        if self.lam.size and self.lam[0] < floor:
            raise np.linalg.LinAlgError(
                f"G is not positive semidefinite (smallest eigenvalue {self.lam[0]:.3e})")

    def solve(self, b: np.ndarray, rho: float) -> np.ndarray:
        denom = 2.0 * self.lam + rho
        if denom.size and denom.min() <= 0:
            raise np.linalg.LinAlgError("2G + rho I is not positive definite")
        return self.Q @ ((self.Q.T @ b) / denom)


def solve_qp(problem: QpProblem, settings: SolverSettings | None = None,
             record_history: bool = False) -> QpSolution:
    """Minimize ``a'Ga - 2h'a`` over the l1 ball with scaled-form ADMM.

    Splitting: f(x) = x'Gx - 2h'x, g(z) = indicator of the ball, x = z.
    The returned ``alpha`` is the last z iterate, so it is always feasible.
    Stopping uses the combined absolute/relative residual test with
    eps_abs = eps_rel = the configured tolerance.

    With ``record_history`` the objective of every z iterate is kept.
    """
    settings = settings or SolverSettings()
    n = problem.size
    G, h, R = problem.G, problem.h, problem.radius
    factor = _EigSolver(G)

    rho = float(settings.rho)
    x = np.zeros(n)
    z = np.zeros(n)
    u = np.zeros(n)
    history = []
    sqrt_n = math.sqrt(n)
    r_norm = s_norm = math.inf
    converged = False
    it = 0
    for it in range(1, settings.max_iters + 1):
        x = factor.solve(2.0 * h + rho * (z - u), rho)
        z_old = z
        z = project_l1_ball(x + u, R)
        u = u + x - z

        r_norm = float(np.linalg.norm(x - z))
        s_norm = float(rho * np.linalg.norm(z - z_old))
        eps_pri = sqrt_n * settings.tol_primal + settings.tol_primal * max(
            float(np.linalg.norm(x)), float(np.linalg.norm(z)))
        eps_dual = sqrt_n * settings.tol_dual + settings.tol_dual * rho * float(np.linalg.norm(u))
        if record_history:
            history.append(float(z @ G @ z - 2.0 * h @ z))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break

        if settings.adaptive_rho and it % settings.adapt_every == 0:
            # u is the scaled dual rho^-1 y, so it rescales inversely with rho
            if r_norm > settings.adapt_mu * s_norm:
                rho *= settings.adapt_tau
                u /= settings.adapt_tau
            elif s_norm > settings.adapt_mu * r_norm:
                rho /= settings.adapt_tau
                u *= settings.adapt_tau

    return QpSolution(
        alpha=z,
        iterations=it,
        primal_residual=r_norm,
        dual_residual=s_norm,
        converged=converged,
        objective=float(z @ G @ z - 2.0 * h @ z),
        rho=rho,
        history=tuple(history),
    )
