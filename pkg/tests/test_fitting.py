import numpy as np
import pytest

from elastica.basis import SplineBasis
from elastica.errors import RankDeficientError
from elastica.fitting import (ObsData, curve_obs_data, design_with_intercept,
                              fit_weighted_mean, fit_weighted_mean_direct,
                              solve_normal_equations, srv_obs_data,
                              total_loss)
from elastica.curves import polygon_from_points
from elastica.srv import PiecewiseConstantSrv


def random_srv(rng, n_cells=8, dim=2):
    bp = np.concatenate(([0.0], np.sort(rng.uniform(size=n_cells - 1)), [1.0]))
    return PiecewiseConstantSrv(bp, rng.normal(size=(n_cells, dim)))


def test_intercept_only_is_projection(rng):
    basis = SplineBasis(1, 5)
    q = random_srv(rng)
    obs = [srv_obs_data(basis, q) for _ in range(4)]
    Xd = np.ones((4, 1))
    coef = solve_normal_equations(Xd, obs, basis)
    # projection: G c = moments
    proj = np.linalg.solve(basis.gram, obs[0].moments)
    np.testing.assert_allclose(coef[0], proj, atol=1e-12)
    # loss equals n times the single projection residual
    single = obs[0].norm_sq - float(np.sum(proj * obs[0].moments))
    loss = total_loss(Xd, coef, obs, basis.gram)
    np.testing.assert_allclose(loss, 4 * single, rtol=1e-10)


def test_exact_recovery_degree0(rng):
    basis = SplineBasis(0, 7)
    M = basis.size
    xi = rng.normal(size=(2, M, 2))
    xs = np.linspace(-1.0, 1.0, 9)
    obs = []
    for x in xs:
        vals = xi[0] + x * xi[1]
        obs.append(srv_obs_data(basis, PiecewiseConstantSrv(basis.knots, vals)))
    coef = solve_normal_equations(design_with_intercept(xs[:, None]), obs, basis)
    np.testing.assert_allclose(coef, xi, atol=1e-10)


def test_two_point_simple_regression():
    # constant-in-t scalar responses reduce to ordinary linear regression
    basis = SplineBasis(0, 2)
    y = np.array([1.3, 2.9])
    x = np.array([0.5, 2.0])
    obs = [ObsData(np.array([[yi]]), yi ** 2) for yi in y]
    coef = solve_normal_equations(design_with_intercept(x[:, None]), obs, basis)
    slope = (y[1] - y[0]) / (x[1] - x[0])
    intercept = y[0] - slope * x[0]
    np.testing.assert_allclose(coef[1, 0, 0], slope, rtol=1e-12)
    np.testing.assert_allclose(coef[0, 0, 0], intercept, rtol=1e-12)


def test_fit_is_global_minimum(rng):
    basis = SplineBasis(1, 6)
    obs = [srv_obs_data(basis, random_srv(rng)) for _ in range(7)]
    X = rng.normal(size=(7, 2))
    Xd = design_with_intercept(X)
    coef = solve_normal_equations(Xd, obs, basis)
    best = total_loss(Xd, coef, obs, basis.gram)
    for _ in range(30):
        pert = coef.copy()
        j = rng.integers(coef.shape[0])
        m = rng.integers(coef.shape[1])
        d = rng.integers(coef.shape[2])
        pert[j, m, d] += rng.choice([-1e-3, 1e-3])
        assert total_loss(Xd, pert, obs, basis.gram) >= best - 1e-12


def test_nested_model_loss_never_increases(rng):
    basis = SplineBasis(1, 5)
    obs = [srv_obs_data(basis, random_srv(rng)) for _ in range(9)]
    X = rng.normal(size=(9, 2))
    small = solve_normal_equations(design_with_intercept(X[:, :1]), obs, basis)
    big = solve_normal_equations(design_with_intercept(X), obs, basis)
    loss_small = total_loss(design_with_intercept(X[:, :1]), small, obs, basis.gram)
    loss_big = total_loss(design_with_intercept(X), big, obs, basis.gram)
    assert loss_big <= loss_small + 1e-10


def test_weighted_mean_matches_direct(rng):
    basis = SplineBasis(1, 6)
    obs = [srv_obs_data(basis, random_srv(rng)) for _ in range(6)]
    # Frechet-style weights averaging to one, some negative
    s = 1.0 + rng.normal(size=6)
    s = s - s.mean() + 1.0
    via_pseudo = fit_weighted_mean(obs, s, basis)
    direct = fit_weighted_mean_direct(obs, s, basis)
    np.testing.assert_allclose(via_pseudo, direct, atol=1e-10)


def test_rank_deficient_reports_columns(rng):
    basis = SplineBasis(0, 3)
    obs = [srv_obs_data(basis, random_srv(rng, 4)) for _ in range(6)]
    X = np.column_stack([np.ones(6), rng.normal(size=6)])  # dup intercept
    with pytest.raises(RankDeficientError) as err:
        solve_normal_equations(design_with_intercept(X), obs, basis)
    assert err.value.columns  # the offending columns are named


def test_ridge_rescues_degenerate_design(rng):
    basis = SplineBasis(0, 3)
    obs = [srv_obs_data(basis, random_srv(rng, 4)) for _ in range(6)]
    X = np.column_stack([np.ones(6), rng.normal(size=6)])
    coef = solve_normal_equations(design_with_intercept(X), obs, basis,
                                  ridge=1e-9)
    assert np.all(np.isfinite(coef))


def test_curve_obs_data_norm():
    c = polygon_from_points([(0.0, 0.0), (1.0, 0.0)])
    o = curve_obs_data(SplineBasis(1, 3), c)
    # integral of ||(t, 0)||^2 = 1/3
    np.testing.assert_allclose(o.norm_sq, 1.0 / 3.0, rtol=1e-12)
    # moments against nonnegative hats reproduce integral of t
    np.testing.assert_allclose(o.moments.sum(axis=0), [0.5, 0.0], atol=1e-12)
