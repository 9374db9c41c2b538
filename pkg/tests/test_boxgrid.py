import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbkde.boxgrid import BoxGrid, box_approx_error, box_beta, fit_box_fbkde, flat_index, multi_index
from fbkde.estimator import FitConfig
from fbkde.kernels import kernel_matrix
from fbkde.qp import qp_objective

from oracles import hinge_function


def cell_interior_points(grid, per_cell, rng):
    """Random points strictly inside every cell, with their flat cell index."""
    iota = grid.multi_indices()
    offs = rng.uniform(0.05, 0.95, size=(iota.shape[0], per_cell, grid.d))
    pts = ((iota[:, None, :] - 1) + offs) / grid.mq
    cells = np.repeat(np.arange(1, grid.size + 1), per_cell)
    return pts.reshape(-1, grid.d), cells


# ---- indexing --------------------------------------------------------------

def test_flat_index_base_and_hand_value():
    assert flat_index((1, 1, 1), 5) == 1
    assert flat_index((2, 3), 3) == 1 + 1 * 1 + 2 * 3 == 8


def test_index_round_trip_exhaustive():
    mq, d = 4, 3
    for i in range(1, mq**d + 1):
        assert flat_index(multi_index(i, mq, d), mq) == i
    for iota in itertools.product(range(1, mq + 1), repeat=d):
        assert multi_index(flat_index(iota, mq), mq, d) == iota


@pytest.mark.parametrize("bad", [(0, 1), (1, 4)])
def test_flat_index_out_of_range(bad):
    with pytest.raises(ValueError):
        flat_index(bad, 3)


@pytest.mark.parametrize("i", [0, 10])
def test_multi_index_out_of_range(i):
    with pytest.raises(ValueError):
        multi_index(i, 3, 2)


# ---- grid ------------------------------------------------------------------

def test_grid_geometry():
    g = BoxGrid(q=2, m=3, d=2)
    assert g.sigma * 2 * g.q == 1.0
    assert g.size == 36 and g.centers().shape == (36, 2)
    # i = 8 <-> iota = (2, 2) at mq = 6
    iota = multi_index(8, 6, 2)
    assert np.allclose(g.centers()[7], (np.array(iota) - 1) / 6 + 0.25)
    assert np.allclose(g.anchors()[7], np.array(iota) / 6)
    with pytest.raises(ValueError):
        BoxGrid(0, 1, 1)


def test_cell_of_boundaries_go_to_lower_cell():
    g = BoxGrid(1, 2, 1)
    assert g.cell_of([0.0, 0.25, 0.5, 0.75, 1.0]).tolist() == [1, 1, 1, 2, 2]


def test_kernel_support_distance():
    g = BoxGrid(1, 3, 2)
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, size=(200, 2))
    K = kernel_matrix(g.kernel, x, g.centers())
    cheb = np.max(np.abs(x[:, None, :] - g.centers()[None]), axis=2)
    assert np.array_equal(K != 0, cheb <= g.sigma)


def test_cover_count_q1_m2_d2():
    # kernel i spans cells iota_i .. iota_i + m - 1 per axis, so a cell with
    # multi-index kappa is covered by prod_l min(kappa_l, m) kernels
    g = BoxGrid(1, 2, 2)
    rng = np.random.default_rng(1)
    pts, cells = cell_interior_points(g, 5, rng)
    K = kernel_matrix(g.kernel, pts, g.centers())
    counts = (K > 0).sum(axis=1)
    for c, cnt in zip(cells, counts):
        kappa = multi_index(int(c), g.mq, 2)
        assert cnt == np.prod(np.minimum(kappa, g.m))
    # away from the lower faces the count is exactly m^d
    assert counts[cells == flat_index((2, 2), 2)].tolist() == [4] * 5


# ---- beta construction -----------------------------------------------------

def test_beta_hand_trace():
    bb = box_beta(lambda x: x[:, 0], q=1, m=2, d=1)
    assert np.allclose(bb.beta, [0.5, 0.5], atol=1e-15)
    vals = bb.reconstruct([0.25, 0.75])
    assert vals == pytest.approx([0.5, 1.0], abs=1e-15)


def test_beta_constant_function():
    c = 1.7
    bb = box_beta(lambda x: np.full(x.shape[0], c), q=2, m=3, d=2)
    # a kernel spans m cells per axis, so the blocks starting at 1, m + 1, ...
    # tile the grid and carry the whole value
    starts = np.all((bb.grid.multi_indices() - 1) % 3 == 0, axis=1)
    assert np.allclose(bb.beta[starts], c, atol=1e-14)
    assert np.allclose(bb.beta[~starts], 0, atol=1e-14)
    rng = np.random.default_rng(0)
    pts, _ = cell_interior_points(bb.grid, 2, rng)
    assert np.allclose(bb.reconstruct(pts), c, atol=1e-12)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("q,m", [(1, 1), (1, 3), (2, 2), (2, 4), (4, 2), (1, 8)])
def test_reconstruction_identity(d, q, m):
    if q * m > 8:
        pytest.skip("mq <= 8")
    rng = np.random.default_rng(10 * q + m + d)
    f, _ = hinge_function(rng, d)
    bb = box_beta(f, q, m, d)
    pts, cells = cell_interior_points(bb.grid, 3, rng)
    expected = f(bb.grid.anchors())[cells - 1]
    assert np.max(np.abs(bb.reconstruct(pts) - expected)) <= 1e-12


def test_reconstruction_at_cell_midpoints_random_2d():
    rng = np.random.default_rng(5)
    f, _ = hinge_function(rng, 2, terms=5)
    bb = box_beta(f, q=1, m=3, d=2)
    g = bb.grid
    mids = (g.multi_indices() - 0.5) / g.mq
    # direct evaluation oracle: loop over kernels covering each midpoint
    for k, x in enumerate(mids):
        total = 0.0
        for i, y in enumerate(g.centers()):
            if np.max(np.abs(x - y)) <= g.sigma:
                total += bb.beta[i] * (2 * g.sigma) ** 2 * (2 * g.sigma) ** -2
        assert total == pytest.approx(f(g.anchors()[k:k + 1])[0], abs=1e-12)


def test_beta_rejects_non_finite():
    with pytest.raises(ValueError):
        box_beta(lambda x: np.full(x.shape[0], np.nan), 1, 2, 1)
    with pytest.raises(ValueError):
        box_beta(lambda x: np.zeros(x.shape[0] + 1), 1, 2, 1)


@pytest.mark.parametrize("d", [1, 2])
def test_l1_bound_random_hinges(d):
    rng = np.random.default_rng(d)
    for _ in range(20):
        f, L = hinge_function(rng, d)
        q, m = int(rng.integers(1, 3)), int(rng.integers(1, 5))
        bb = box_beta(f, q, m, d, lipschitz=L)
        assert np.abs(bb.beta).sum() <= bb.l1_bound


def checkerboard(h):
    """1-Lipschitz f >= 0 alternating between h and 0 on grid corners of spacing h."""
    k = np.arange(round(1 / h) + 1)
    P = np.array([(a * h, b * h) for a in k for b in k])
    V = np.array([0.5 * h * (-1) ** (a + b) for a in k for b in k])

    def f(x):
        x = np.atleast_2d(x)
        # McShane extension of the corner values keeps the Lipschitz constant at 1
        return 0.5 * h + np.min(V[None] + np.linalg.norm(x[:, None] - P[None], axis=2), axis=1)

    return f


def test_l1_bound_can_fail_for_oscillating_function():
    # every cell carries a mixed second difference of size 2h, so ||beta||_1
    # grows like 2m while the bound grows like sqrt(2) m
    q, m = 1, 8
    f = checkerboard(1 / (q * m))
    bb = box_beta(f, q, m, 2, lipschitz=1.0)
    assert bb.l1_bound == pytest.approx(1 + 8 * math.sqrt(2))
    assert np.abs(bb.beta).sum() == pytest.approx(14.125, abs=1e-12)
    assert np.abs(bb.beta).sum() > bb.l1_bound


# ---- approximation error ---------------------------------------------------

def test_approx_error_constant_zero():
    measured, bound = box_approx_error(lambda x: np.full(x.shape[0], 2.0), 0.0, 1, 2, 2)
    assert measured <= 1e-12 and bound == 0.0


def test_approx_error_identity_closed_form():
    measured, bound = box_approx_error(lambda x: x[:, 0], 1.0, 1, 2, 1)
    assert bound == 0.5
    # f_m = 1/2 on (0, 1/2], 1 on (1/2, 1]: sum of int (x - xbar)^2 = 2 * (1/2)^3 / 3
    assert measured == pytest.approx(math.sqrt(2 * 0.5**3 / 3), abs=1e-12)
    assert measured <= bound


@pytest.mark.parametrize("d", [1, 2])
def test_approx_error_halves_with_m(d):
    rng = np.random.default_rng(7)
    f, L = hinge_function(rng, d)
    prev_m = prev_b = None
    for m in (2, 4, 8):
        measured, bound = box_approx_error(f, L, 1, m, d)
        assert measured <= bound
        if prev_b is not None:
            assert bound <= prev_b / 2 + 1e-15
            assert measured < prev_m
        prev_m, prev_b = measured, bound


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1, 2]), st.integers(1, 2), st.integers(1, 4))
def test_approx_error_within_bound(seed, d, q, m):
    f, L = hinge_function(np.random.default_rng(seed), d)
    measured, bound = box_approx_error(f, L, q, m, d, nodes=4)
    assert measured <= bound + 1e-12


def test_approx_error_dim_limit():
    with pytest.raises(ValueError):
        box_approx_error(lambda x: x[:, 0], 1.0, 1, 1, 3)


# ---- fitting ---------------------------------------------------------------

def test_box_fit_uniform_density():
    X = np.random.default_rng(0).uniform(size=(10_000, 1))
    q, m = 2, 4
    fit = fit_box_fbkde(X, q, m, FitConfig(sigma=1.0, radius=2.0))
    sigma = 1 / (2 * q)
    # cell interiors only: closed box supports overlap on cell faces
    x = np.linspace(sigma, 1 - sigma, 101)
    x = x[np.abs(x * q * m - np.round(x * q * m)) > 1e-9]
    assert np.max(np.abs(fit.density(x) - 1.0)) < 0.1
    assert fit.density.l1_norm <= 2.0 * (1 + 1e-9)


def test_box_fit_tiny_radius():
    X = np.random.default_rng(1).uniform(size=(50, 2))
    fit = fit_box_fbkde(X, 1, 2, FitConfig(sigma=1.0, radius=1e-12))
    assert np.abs(fit.density.weights).sum() <= 1e-12 * (1 + 1e-9)


def test_box_fit_beats_histogram_weights():
    rng = np.random.default_rng(2)
    X = rng.beta(2, 5, size=(400, 1))
    q, m = 2, 3
    fit = fit_box_fbkde(X, q, m, FitConfig(sigma=1.0, radius=5.0))
    g = BoxGrid(q, m, 1)
    # empirical cell mass placed on the kernel whose first cell is that cell
    hist = np.bincount(g.cell_of(X) - 1, minlength=g.size) / 400.0
    assert np.abs(hist).sum() <= 5.0
    assert fit.training_objective <= qp_objective(fit.problem, hist) + 1e-6


def test_box_fit_outside_points():
    X = np.array([[0.2], [1.3], [0.5]])
    with pytest.raises(ValueError):
        fit_box_fbkde(X, 1, 2, FitConfig(sigma=1.0, radius=1.0))
    fit = fit_box_fbkde(X, 1, 2, FitConfig(sigma=1.0, radius=1.0), outside="clamp")
    assert fit.density.n == 2
    assert fit.problem.h[-1] == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        fit_box_fbkde(X, 1, 2, FitConfig(sigma=1.0, radius=1.0), outside="wrap")
