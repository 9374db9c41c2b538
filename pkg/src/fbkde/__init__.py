"""Fixed-bandwidth kernel density estimation."""
from .estimator import (
    FbkdeFit,
    FitConfig,
    Standardizer,
    WeightedDensity,
    density_eval,
    fit_fbkde,
    fit_kde,
    fit_vkde,
    jitter_centers,
    loo_h,
    standardize,
)
from .kernels import Family, KernelSpec, cross_integral, gram_matrix, kernel_eval
from .qp import QpProblem, QpSolution, SolverSettings, project_l1_ball, qp_objective, solve_qp

__version__ = "0.1.0"
