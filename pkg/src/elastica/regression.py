"""Regression estimators for curve-valued responses.

Five estimators share a common interface: fit on a covariate matrix and a
list of curves, predict curves at new covariate values.

* :class:`QuotientCurveRegression` -- linear model on SRV level fitted by
  alternating curve-to-prediction alignment with an exact L2 spline fit;
  the quotient loss is non-increasing across every half step.  With
  ``closed=True`` the alignment targets are the SRVs of the closed
  projections of the predictions.
* :class:`PrealignSRVRegression` -- align every curve once to the elastic
  mean, then a single L2 fit on SRV level.
* :class:`PrealignCurveRegression` -- as above, but the linear model is
  fitted on curve level (one degree higher splines).
* :class:`IterateCurveRegression` -- alternates curve-level fitting with
  re-alignment of the data to the current predictions; there is no risk
  function this procedure minimizes, so no monotonicity is guaranteed.
* :class:`FrechetCurveRegression` -- covariate-weighted Fréchet means; no
  global parameters, each prediction is estimated separately.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .alignment import AlignConfig, align_to_target
from .basis import SplineBasis, SplineFunction
from .curves import Curve, Warping, apply_warping
from .dataset import check_X_curves, check_covariates, check_curves
from .errors import (DegeneratePredictionError, NotFittedError,
                     SingularCovarianceError)
from .fitting import (ObsData, design_with_intercept, curve_obs_data,
                      fit_weighted_mean, max_coef_change_sq,
                      observation_loss, predictor_coefs,
                      solve_normal_equations, srv_obs_data, total_loss)
from .srv import (ClosedPredictionSrv, SplineCurveSrv, close_prediction,
                  srv_inverse, srv_transform)


def _random_warping(rng, n_interior: int = 4) -> Warping:
    s = np.sort(rng.uniform(0.0, 1.0, size=n_interior))
    v = np.sort(rng.uniform(0.0, 1.0, size=n_interior))
    eps = 1e-3  # keep knots away from the ends so slopes stay finite
    s = eps + (1 - 2 * eps) * s
    v = eps + (1 - 2 * eps) * v
    return Warping(np.concatenate(([0.0], s, [1.0])),
                   np.concatenate(([0.0], v, [1.0])))


class _CurveRegressionBase(BaseEstimator):
    """Shared hyper-parameters, validation and prediction machinery."""

    def __init__(self, degree=1, n_knots=11, closed=False, eps=1e-6,
                 max_iter=50, n_grid=200, align_tol=1e-8, max_sweeps=50,
                 n_restarts=1, random_state=None, ridge=0.0, grid_out=100):
        self.degree = degree
        self.n_knots = n_knots
        self.closed = closed
        self.eps = eps
        self.max_iter = max_iter
        self.n_grid = n_grid
        self.align_tol = align_tol
        self.max_sweeps = max_sweeps
        self.n_restarts = n_restarts
        self.random_state = random_state
        self.ridge = ridge
        self.grid_out = grid_out

    # model level: "srv" for SRV-linear models, "curve" for curve-level fits
    _level = "srv"

    def _srv_basis(self) -> SplineBasis:
        return SplineBasis(self.degree, self.n_knots, periodic=self.closed)

    def _curve_basis(self) -> SplineBasis:
        if self.degree + 1 > 2:
            raise ValueError("curve-level fits need SRV degree <= 1")
        return SplineBasis(self.degree + 1, self.n_knots, periodic=self.closed)

    def _align_config(self) -> AlignConfig:
        return AlignConfig(n_grid=self.n_grid, tol=self.align_tol,
                           max_sweeps=self.max_sweeps)

    def _validate_fit(self, X, curves):
        X, curves = check_X_curves(X, curves)
        if X.shape[0] < X.shape[1] + 1:
            raise ValueError("need at least k + 1 observations")
        self.n_features_in_ = X.shape[1]
        self.dim_ = curves[0].dim
        return X, curves

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise NotFittedError("call fit before predict")

    def _validate_predict(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_covariates(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} covariates, got {X.shape[1]}")
        return X

    def _prediction_curve(self, spline: SplineFunction) -> Curve:
        if self._level == "curve":
            ts = np.linspace(0.0, 1.0, self.grid_out)
            pts = spline(ts)
            if self.closed:
                pts[-1] = pts[0]
            return Curve(pts, ts, closed=self.closed)
        if self.closed:
            return close_prediction(spline, self.grid_out)
        return srv_inverse(spline, self.grid_out)

    def predict(self, X, center: str = "origin") -> list[Curve]:
        """Predicted curves at the covariate rows of ``X``.

        ``center="centroid"`` translates each prediction to its center of
        mass instead of anchoring at the start point.
        """
        X = self._validate_predict(X)
        Xd = design_with_intercept(X)
        P = predictor_coefs(Xd, self.coef_)
        out = []
        for row in P:
            c = self._prediction_curve(SplineFunction(self.basis_, row))
            out.append(c.centered() if center == "centroid" else c)
        return out

    def predictor_spline(self, x) -> SplineFunction:
        """Model predictor (SRV or curve level) at a single covariate vector."""
        X = self._validate_predict(np.atleast_2d(np.asarray(x, dtype=float)))
        row = predictor_coefs(design_with_intercept(X), self.coef_)[0]
        return SplineFunction(self.basis_, row)


class QuotientCurveRegression(_CurveRegressionBase):
    """Linear regression on SRV level modulo re-parametrization.

    Alternates a warping step (align each observed polygon to its current
    prediction) with an exact L2 spline re-fit until the largest squared
    L2 change of a coefficient function drops to ``eps``.  Initial
    parametrizations are taken as given; they only provide a starting
    value.  ``n_restarts > 1`` adds randomly re-warped initializations and
    keeps the best final loss.

    Attributes
    ----------
    coef_ : array of shape (k+1, M, d)
        Spline coefficients of intercept and slope functions.
    loss_trace_ : list of float
        Quotient loss after the initial fit and after every half step.
    converged_ : bool
        Whether the coefficient-change tolerance was met; non-convergence
        is reported here, not raised.
    """

    def __init__(self, degree=1, n_knots=11, closed=False, eps=1e-6,
                 max_iter=50, n_grid=200, align_tol=1e-8, max_sweeps=50,
                 n_restarts=1, random_state=None, ridge=0.0, grid_out=100,
                 warm_start_coef=None):
        super().__init__(degree=degree, n_knots=n_knots, closed=closed,
                         eps=eps, max_iter=max_iter, n_grid=n_grid,
                         align_tol=align_tol, max_sweeps=max_sweeps,
                         n_restarts=n_restarts, random_state=random_state,
                         ridge=ridge, grid_out=grid_out)
        self.warm_start_coef = warm_start_coef

    def fit(self, X, y):
        X, curves = self._validate_fit(X, y)
        basis = self._srv_basis()
        srvs = [srv_transform(c) for c in curves]
        rng = np.random.default_rng(self.random_state)
        best = None
        for restart in range(max(1, int(self.n_restarts))):
            if restart == 0:
                start = srvs
            else:
                start = [srv_transform(apply_warping(c, _random_warping(rng)))
                         for c in curves]
            state = self._run(design_with_intercept(X), start, basis)
            if best is None or state[1][-1] < best[1][-1]:
                best = state
        coef, trace, n_iter, converged = best
        self.basis_ = basis
        self.coef_ = coef
        self.loss_trace_ = trace
        self.n_iter_ = n_iter
        self.converged_ = converged
        return self

    def _run(self, Xd, srvs, basis):
        cfg = self._align_config()
        gram = basis.gram
        obs = [srv_obs_data(basis, q) for q in srvs]
        if self.warm_start_coef is not None:
            coef = np.asarray(self.warm_start_coef, dtype=float)
        else:
            coef = solve_normal_equations(Xd, obs, basis, self.ridge)
        trace = [total_loss(Xd, coef, obs, gram)]
        converged = False
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            old = coef
            P = predictor_coefs(Xd, coef)
            for i, q in enumerate(srvs):
                spline = SplineFunction(basis, P[i])
                if self.closed:
                    target = ClosedPredictionSrv(spline)
                    if target.norm_sq() <= 1e-12 * max(1.0, spline.norm_sq()):
                        raise DegeneratePredictionError(
                            f"predicted SRV for observation {i} vanishes")
                    res = align_to_target(q, target, cfg)
                    obs[i] = srv_obs_data(basis, res.warped_srv, res.lost_mass)
                else:
                    res = align_to_target(q, spline, cfg)
                    cand = srv_obs_data(basis, res.warped_srv, res.lost_mass)
                    # keep the previous warping when the fresh search does
                    # not improve this observation's exact loss term
                    if (observation_loss(P[i], cand, gram)
                            < observation_loss(P[i], obs[i], gram)):
                        obs[i] = cand
            trace.append(total_loss(Xd, coef, obs, gram))
            coef = solve_normal_equations(Xd, obs, basis, self.ridge)
            trace.append(total_loss(Xd, coef, obs, gram))
            if max_coef_change_sq(old, coef, gram) <= self.eps:
                converged = True
                break
        return coef, trace, n_iter, converged


class _PrealignBase(_CurveRegressionBase):
    def _aligned_observations(self, curves):
        """Align every curve once to the elastic mean; returns warped SRVs."""
        mean = QuotientCurveRegression(**self.get_params())
        mean.fit(np.empty((len(curves), 0)), curves)
        mu = SplineFunction(mean.basis_, mean.coef_[0])
        target = ClosedPredictionSrv(mu) if self.closed else mu
        cfg = self._align_config()
        results = [align_to_target(srv_transform(c), target, cfg)
                   for c in curves]
        self.mean_coef_ = mean.coef_[0]
        return results


class PrealignSRVRegression(_PrealignBase):
    """One-time pre-alignment to the elastic mean, then a single SRV-level fit.

    The attained quotient risk can never fall below the quotient
    regression fit, since the alignments are not updated to the model.
    """

    def fit(self, X, y):
        X, curves = self._validate_fit(X, y)
        basis = self._srv_basis()
        results = self._aligned_observations(curves)
        obs = [srv_obs_data(basis, r.warped_srv, r.lost_mass) for r in results]
        Xd = design_with_intercept(X)
        self.coef_ = solve_normal_equations(Xd, obs, basis, self.ridge)
        self.basis_ = basis
        self.loss_trace_ = [total_loss(Xd, self.coef_, obs, basis.gram)]
        self.n_iter_ = 1
        self.converged_ = True
        return self


class PrealignCurveRegression(_PrealignBase):
    """Pre-alignment followed by a linear fit on curve level.

    The aligned curves are fitted with splines one degree higher than the
    SRV degree; with ``closed=True`` a periodic basis makes predictions
    closed without any projection.
    """

    _level = "curve"

    def fit(self, X, y):
        X, curves = self._validate_fit(X, y)
        basis = self._curve_basis()
        results = self._aligned_observations(curves)
        reps = [srv_inverse(r.warped_srv) for r in results]
        obs = [curve_obs_data(basis, c) for c in reps]
        Xd = design_with_intercept(X)
        self.coef_ = solve_normal_equations(Xd, obs, basis, self.ridge)
        self.basis_ = basis
        self.loss_trace_ = [total_loss(Xd, self.coef_, obs, basis.gram)]
        self.n_iter_ = 1
        self.converged_ = True
        return self


class IterateCurveRegression(_CurveRegressionBase):
    """Alternate curve-level fitting with re-alignment to the predictions.

    Alignment still minimizes the SRV-level distance to the predicted
    curve, but the refit happens on curve level, so the iteration
    optimizes no single risk function; it stops on the coefficient-change
    tolerance or ``max_iter``.
    """

    _level = "curve"

    def fit(self, X, y):
        X, curves = self._validate_fit(X, y)
        basis = self._curve_basis()
        cfg = self._align_config()
        gram = basis.gram
        srvs = [srv_transform(c) for c in curves]
        reps = [srv_inverse(q) for q in srvs]
        obs = [curve_obs_data(basis, c) for c in reps]
        Xd = design_with_intercept(X)
        coef = solve_normal_equations(Xd, obs, basis, self.ridge)
        trace = [total_loss(Xd, coef, obs, gram)]
        converged = False
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            old = coef
            P = predictor_coefs(Xd, coef)
            for i, q in enumerate(srvs):
                target = SplineCurveSrv(SplineFunction(basis, P[i]))
                res = align_to_target(q, target, cfg)
                obs[i] = curve_obs_data(basis, srv_inverse(res.warped_srv))
            coef = solve_normal_equations(Xd, obs, basis, self.ridge)
            trace.append(total_loss(Xd, coef, obs, gram))
            if max_coef_change_sq(old, coef, gram) <= self.eps:
                converged = True
                break
        self.coef_ = coef
        self.basis_ = basis
        self.loss_trace_ = trace
        self.n_iter_ = n_iter
        self.converged_ = converged
        return self


class FrechetCurveRegression(_CurveRegressionBase):
    """Fréchet regression: covariate-weighted elastic means.

    With weights ``s(x_i, x) = 1 + (x_i - mean)^T Cov^{-1} (x - mean)``
    each prediction is a weighted Fréchet mean computed by alternating
    alignment to the current mean with a weighted L2 spline fit (via the
    pseudo-data reduction).  There are no global model parameters; every
    requested covariate vector is estimated separately.
    """

    def fit(self, X, y):
        X, curves = self._validate_fit(X, y)
        if X.shape[0] < 2:
            raise ValueError("need at least two observations")
        basis = self._srv_basis()
        self.x_mean_ = X.mean(axis=0)
        centered = X - self.x_mean_
        cov = centered.T @ centered / X.shape[0]
        if X.shape[1]:
            sv = np.linalg.svd(cov, compute_uv=False)
            if sv.size and sv[-1] <= 1e-12 * max(sv[0], 1.0):
                raise SingularCovarianceError(
                    "covariate covariance is singular; drop collinear "
                    "covariates")
            self.x_cov_inv_ = np.linalg.inv(cov)
        else:
            self.x_cov_inv_ = np.zeros((0, 0))
        self.X_ = X
        self.srvs_ = [srv_transform(c) for c in curves]
        self.obs0_ = [srv_obs_data(basis, q) for q in self.srvs_]
        self.basis_ = basis
        # unweighted initial mean shared by all predictions
        ones = np.ones((len(curves), 1))
        self.coef_ = solve_normal_equations(ones, self.obs0_, basis,
                                            self.ridge)
        self.n_iter_ = 0
        self.converged_ = True
        return self

    def weights(self, x) -> np.ndarray:
        """Fréchet regression weights of the training rows at input ``x``."""
        self._check_fitted()
        x = np.asarray(x, dtype=float).ravel()
        centered = self.X_ - self.x_mean_
        return 1.0 + centered @ self.x_cov_inv_ @ (x - self.x_mean_)

    def predict(self, X, center: str = "origin") -> list[Curve]:
        X = self._validate_predict(X)
        out = []
        for x in X:
            spline = self._weighted_mean(x)
            c = (close_prediction(spline, self.grid_out) if self.closed
                 else srv_inverse(spline, self.grid_out))
            out.append(c.centered() if center == "centroid" else c)
        return out

    def _weighted_mean(self, x) -> SplineFunction:
        basis = self.basis_
        gram = basis.gram
        cfg = self._align_config()
        s = self.weights(x)
        mean_coef = self.coef_[0]
        for _ in range(self.max_iter):
            spline = SplineFunction(basis, mean_coef)
            target = ClosedPredictionSrv(spline) if self.closed else spline
            obs = []
            for q in self.srvs_:
                res = align_to_target(q, target, cfg)
                obs.append(srv_obs_data(basis, res.warped_srv, res.lost_mass))
            new_coef = fit_weighted_mean(obs, s, basis)
            delta = float(np.einsum("md,mn,nd->", new_coef - mean_coef, gram,
                                    new_coef - mean_coef))
            mean_coef = new_coef
            if delta <= self.eps:
                break
        return SplineFunction(basis, mean_coef)


def elastic_mean(curves, **params) -> Curve:
    """Unconditional elastic mean: intercept-only quotient regression.

    Keyword arguments are forwarded to :class:`QuotientCurveRegression`;
    pass ``closed=True`` for closed curves.
    """
    curves = check_curves(curves)
    est = QuotientCurveRegression(**params)
    est.fit(np.empty((len(curves), 0)), curves)
    return est.predict(np.empty((1, 0)))[0]


def quotient_model_loss(estimator, X, curves) -> float:
    """Attained quotient risk of a fitted SRV-level model on a dataset.

    Re-aligns every observation to its prediction with the standard
    warping routine and sums the squared residuals, so different
    estimators are compared on the same footing.
    """
    if estimator._level != "srv":
        raise ValueError("quotient loss is defined for SRV-level models")
    X = estimator._validate_predict(check_covariates(X))
    curves = check_curves(curves)
    Xd = design_with_intercept(X)
    P = predictor_coefs(Xd, estimator.coef_)
    cfg = estimator._align_config()
    loss = 0.0
    for i, c in enumerate(curves):
        spline = SplineFunction(estimator.basis_, P[i])
        target = ClosedPredictionSrv(spline) if estimator.closed else spline
        loss += align_to_target(srv_transform(c), target, cfg).residual ** 2
    return loss
