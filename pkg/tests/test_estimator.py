import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbkde.estimator import (FitConfig, Standardizer, WeightedDensity, density_eval, fit_fbkde, fit_kde, fit_vkde,
                             jitter_centers, loo_h, standardize)
from fbkde.kernels import Family, KernelSpec, kernel_eval
from fbkde.qp import project_l1_ball, qp_objective
from fbkde.synthetic import BIMODAL
from fbkde.tuning import rule_of_thumb

from oracles import simpson

GAUSS = KernelSpec(Family.GAUSSIAN, 0.5, 1)


def test_weighted_density_validation():
    with pytest.raises(ValueError):
        WeightedDensity(GAUSS, np.zeros((3, 1)), np.ones(2))
    with pytest.raises(ValueError):
        WeightedDensity(GAUSS, np.zeros((2, 2)), np.ones(2))
    with pytest.raises(ValueError):
        WeightedDensity(GAUSS, np.zeros((2, 1)), np.ones(2), per_center_sigma=[1.0, -1.0])


def test_weighted_density_is_read_only():
    est = fit_kde(np.arange(4.0), 0.5)
    with pytest.raises(ValueError):
        est.weights[0] = 3.0


def test_fit_config_validation():
    with pytest.raises(ValueError):
        FitConfig(sigma=0, radius=1)
    with pytest.raises(ValueError):
        FitConfig(sigma=1, radius=0)
    with pytest.raises(ValueError):
        FitConfig(sigma=1, radius=1, sigma_gamma=-0.1)


# ---- jitter ---------------------------------------------------------------

def test_jitter_zero_is_identity():
    x = np.random.default_rng(0).normal(size=(20, 2))
    assert np.array_equal(jitter_centers(x, 0.0, seed=1), x)


def test_jitter_deterministic():
    x = np.zeros((10, 1))
    assert np.array_equal(jitter_centers(x, 0.3, seed=5), jitter_centers(x, 0.3, seed=5))


def test_jitter_scale():
    x = np.zeros((10_000, 1))
    diff = jitter_centers(x, 0.1, seed=2) - x
    assert abs(diff.std(ddof=1) - 0.1) < 0.005


def test_jitter_negative_raises():
    with pytest.raises(ValueError):
        jitter_centers(np.zeros(3), -1.0)


# ---- leave-one-out term ---------------------------------------------------

def test_loo_two_points():
    X = np.array([[0.0], [1.0]])
    Z = np.array([[0.1], [0.8]])
    h = loo_h(GAUSS, X, Z)
    assert h[0] == pytest.approx(kernel_eval(GAUSS, X[1], Z[0]), abs=1e-15)
    assert h[1] == pytest.approx(kernel_eval(GAUSS, X[0], Z[1]), abs=1e-15)


def test_loo_identical_points():
    X = np.full((7, 2), 0.4)
    spec = KernelSpec(Family.GAUSSIAN, 0.3, 2)
    assert np.allclose(loo_h(spec, X, X), spec.c_k, rtol=1e-14)


def test_loo_matches_double_loop():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 2))
    Z = X + 0.1 * rng.normal(size=(50, 2))
    spec = KernelSpec(Family.GAUSSIAN, 0.6, 2)
    expected = [sum(kernel_eval(spec, X[j], Z[i]) for j in range(50) if j != i) / 49 for i in range(50)]
    assert np.allclose(loo_h(spec, X, Z), expected, rtol=0, atol=1e-12)


def test_loo_errors():
    with pytest.raises(ValueError):
        loo_h(GAUSS, np.zeros((1, 1)), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        loo_h(GAUSS, np.zeros((3, 1)), np.zeros((2, 1)))


# ---- fbKDE ----------------------------------------------------------------

def test_fbkde_identical_points_symmetric_weights():
    X = np.array([[0.3], [0.3]])
    fit = fit_fbkde(X, FitConfig(sigma=0.5, radius=100.0))
    a = fit.density.weights
    assert a[0] == pytest.approx(a[1], abs=1e-6)


def test_fbkde_tiny_radius():
    X = BIMODAL.sample(40, seed=0)
    fit = fit_fbkde(X, FitConfig(sigma=0.3, radius=1e-12))
    assert np.abs(fit.density.weights).sum() <= 1e-12 * (1 + 1e-9)
    assert abs(fit.training_objective) < 1e-10


def test_fbkde_rot_beats_uniform_weights():
    X, _ = standardize(BIMODAL.sample(800, seed=1))
    cfg = rule_of_thumb(X, seed=1)
    assert cfg.radius >= 1
    fit = fit_fbkde(X, cfg)
    uniform = np.full(800, 1 / 800)
    assert fit.training_objective <= qp_objective(fit.problem, uniform) + 1e-5
    assert fit.density.l1_norm <= cfg.radius * (1 + 1e-9)


def test_fbkde_beats_random_feasible():
    X, _ = standardize(BIMODAL.sample(120, seed=2))
    cfg = FitConfig(sigma=0.3, radius=2.0, sigma_gamma=0.05, seed=3)
    fit = fit_fbkde(X, cfg)
    rng = np.random.default_rng(0)
    for _ in range(100):
        w = project_l1_ball(rng.normal(size=120) * rng.uniform(0.01, 1), cfg.radius)
        assert fit.training_objective <= qp_objective(fit.problem, w) + 1e-5


def test_fbkde_deterministic():
    X = BIMODAL.sample(100, seed=4)
    cfg = FitConfig(sigma=0.3, radius=3.0, sigma_gamma=0.05, seed=9)
    a = fit_fbkde(X, cfg).density.weights
    b = fit_fbkde(X, cfg).density.weights
    assert np.array_equal(a, b)


def test_fbkde_needs_two_points():
    with pytest.raises(ValueError):
        fit_fbkde(np.zeros((1, 1)), FitConfig(sigma=1, radius=1))


# ---- KDE and vKDE ---------------------------------------------------------

def test_kde_single_point():
    est = fit_kde(np.array([[0.0]]), 0.5)
    assert est.weights.tolist() == [1.0]
    assert density_eval(est, 0.0) == pytest.approx(GAUSS.c_k)


def test_kde_mass_and_far_value():
    X = BIMODAL.sample(200, seed=0)
    sigma = 0.2
    est = fit_kde(X, sigma)
    lo, hi = X.min() - 8 * sigma, X.max() + 8 * sigma
    x = np.linspace(lo, hi, 20_001)
    vals = density_eval(est, x)
    assert simpson(vals, lo, hi) == pytest.approx(1.0, abs=1e-4)
    assert np.all(vals >= 0)
    assert density_eval(est, X.max() + 11 * sigma) < 1e-10


def test_kde_empty_raises():
    with pytest.raises(ValueError):
        fit_kde(np.zeros((0, 1)), 1.0)


def test_vkde_constant_pilot():
    # two points: the pilot is the same at both
    est = fit_vkde(np.array([[0.0], [1.0]]), 0.4)
    assert np.allclose(est.per_center_sigma, 0.4, rtol=1e-14)
    assert np.allclose(est.weights, 0.5)


def test_vkde_geometric_mean_direct_product():
    X = BIMODAL.sample(20, seed=3)
    sigma = 0.3
    est = fit_vkde(X, sigma)
    pilot = [sum(kernel_eval(KernelSpec("gaussian", sigma), X[j], X[i]) for j in range(20)) / 20
             for i in range(20)]
    lam = math.prod(pilot) ** (1 / 20)
    expected = [sigma * math.sqrt(lam / p) for p in pilot]
    assert np.allclose(est.per_center_sigma, expected, rtol=1e-10, atol=0)
    assert np.sum(np.log(est.per_center_sigma)) == pytest.approx(20 * math.log(sigma), abs=1e-10)


def test_vkde_box_kernel():
    est = fit_vkde(np.array([[0.0], [0.3], [3.0]]), 0.4, Family.BOX)
    # isolated point has the smallest pilot value, hence the widest box
    assert np.argmax(est.per_center_sigma) == 2


def test_vkde_degenerate_pilot_raises():
    # sigma so small the kernel peak overflows: the pilot is not finite
    with np.errstate(all="ignore"), pytest.raises(ValueError):
        fit_vkde(np.array([[0.0], [1.0]]), 1e-200)


# ---- evaluation helpers ---------------------------------------------------

def test_density_eval_zero_weights():
    est = WeightedDensity(GAUSS, np.zeros((3, 1)), np.zeros(3))
    assert density_eval(est, 0.2) == 0.0


def test_density_eval_matches_loop():
    rng = np.random.default_rng(8)
    spec = KernelSpec(Family.GAUSSIAN, 0.7, 2)
    C = rng.normal(size=(15, 2))
    w = rng.normal(size=15)
    sig = rng.uniform(0.2, 1.0, 15)
    est = WeightedDensity(spec, C, w, per_center_sigma=sig)
    x = rng.normal(size=(4, 2))
    for xi, val in zip(x, density_eval(est, x)):
        expected = sum(w[i] * kernel_eval(spec.with_sigma(sig[i]), xi, C[i]) for i in range(15))
        assert val == pytest.approx(expected, abs=1e-12)
    assert isinstance(density_eval(est, x[0]), float)


def test_density_eval_dimension_mismatch():
    est = fit_kde(np.zeros((3, 2)) + np.arange(3)[:, None], 0.5)
    with pytest.raises(ValueError):
        density_eval(est, np.zeros((2, 3)))


def test_squared_norm_matches_quadrature():
    est = fit_vkde(BIMODAL.sample(30, seed=1), 0.3)
    x = np.linspace(-6, 6, 20_001)
    assert est.squared_l2_norm() == pytest.approx(simpson(density_eval(est, x) ** 2, -6, 6), abs=1e-8)


# ---- standardization ------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(1, 3), st.integers(0, 10_000))
def test_standardize_round_trip(n, d, seed):
    X = np.random.default_rng(seed).normal(size=(n, d)) * 3 + 1
    Z, std = standardize(X)
    assert np.allclose(Z.mean(axis=0), 0, atol=1e-10)
    assert np.allclose(Z.std(axis=0, ddof=1), 1, atol=1e-10)
    assert np.allclose(std.inverse_transform(Z), X, atol=1e-10)


def test_standardize_constant_column():
    with pytest.raises(ValueError):
        Standardizer.fit(np.ones((5, 1)))
    with pytest.raises(ValueError):
        Standardizer.fit(np.ones((1, 2)))
