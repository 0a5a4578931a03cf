"""Resampling-based inference: generalized R-squared, permutation test,
bootstrap confidence regions and out-of-bootstrap model comparison.

All procedures are deterministic under a fixed seed; replicates are
independent and may run in parallel, with results reduced by replicate
index regardless of completion order.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from .alignment import AlignConfig, elastic_distance
from .curves import Curve
from .dataset import check_X_curves
from .errors import (DegreesOfFreedomError, InsufficientSamplesError,
                     RankDeficientError, ZeroTotalVariationError)
from .regression import QuotientCurveRegression, elastic_mean

_QUANTILE_METHOD = "linear"  # type-7 empirical quantiles


# ----------------------------------------------------------------------
# coefficient of determination
# ----------------------------------------------------------------------
def frechet_r2(predictions, curves, mean_curve: Curve,
               config: AlignConfig = AlignConfig()) -> float:
    """Generalized R-squared: one minus residual over total metric variation.

    Raises
    ------
    ZeroTotalVariationError
        If all curves coincide up to re-parametrization, so the total
        variation around the mean vanishes.
    """
    if len(predictions) != len(curves):
        raise ValueError("need one prediction per curve")
    total = sum(elastic_distance(c, mean_curve, config) ** 2 for c in curves)
    if total <= 1e-12 * len(curves):
        raise ZeroTotalVariationError(
            "all curves are re-parametrizations of one image")
    resid = sum(elastic_distance(c, p, config) ** 2
                for c, p in zip(curves, predictions))
    return 1.0 - resid / total


def adjusted_r2(r2: float, n: int, k: int) -> float:
    """Degrees-of-freedom adjusted coefficient of determination."""
    if n <= k + 1:
        raise DegreesOfFreedomError(f"n={n} too small for k={k} covariates")
    return 1.0 - (1.0 - r2) * (n - 1) / (n - k - 1)


# ----------------------------------------------------------------------
# global permutation test
# ----------------------------------------------------------------------
@dataclass
class PermutationTest:
    p_value: float
    r2_observed: float
    r2_permuted: np.ndarray

    @property
    def n_perm(self) -> int:
        return self.r2_permuted.size


def _fit_predict_r2(estimator, X, curves, mean_curve, config):
    est = clone(estimator).fit(X, curves)
    preds = est.predict(X)
    return frechet_r2(preds, curves, mean_curve, config)


def _permutation_worker(args):
    estimator, X, curves, mean_curve, config, perm = args
    permuted = [curves[i] for i in perm]
    return _fit_predict_r2(estimator, X, permuted, mean_curve, config)


def permutation_test(estimator, X, curves, n_perm: int = 500,
                     random_state=None, n_jobs: int = 1) -> PermutationTest:
    """Global null test: no covariate affects the curves.

    Refits the model on label permutations of the responses (covariates
    fixed) and compares the observed generalized R-squared to the
    permutation distribution with the add-one rule
    ``p = (1 + #{R2_perm >= R2_obs}) / (n_perm + 1)``.
    """
    if n_perm < 99:
        raise ValueError("need n_perm >= 99 for a meaningful p-value")
    X, curves = check_X_curves(X, curves)
    params = estimator.get_params()
    mean_curve = elastic_mean(
        curves, degree=params["degree"], n_knots=params["n_knots"],
        closed=params["closed"], eps=params["eps"],
        max_iter=params["max_iter"], n_grid=params["n_grid"])
    config = AlignConfig(n_grid=params["n_grid"])
    r2_obs = _fit_predict_r2(estimator, X, curves, mean_curve, config)
    rng = np.random.default_rng(random_state)
    perms = [rng.permutation(len(curves)) for _ in range(n_perm)]
    tasks = [(estimator, X, curves, mean_curve, config, p) for p in perms]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            r2_perm = np.fromiter(pool.map(_permutation_worker, tasks,
                                           chunksize=4), dtype=float,
                                  count=n_perm)
    else:
        r2_perm = np.fromiter(map(_permutation_worker, tasks), dtype=float,
                              count=n_perm)
    p = (1.0 + np.sum(r2_perm >= r2_obs)) / (n_perm + 1.0)
    return PermutationTest(float(p), float(r2_obs), r2_perm)


# ----------------------------------------------------------------------
# bootstrap
# ----------------------------------------------------------------------
@dataclass
class BootstrapSample:
    """One case-resampled refit."""

    index: int
    rows: np.ndarray
    oob_rows: np.ndarray
    coef: np.ndarray
    predictions: list = field(default_factory=list)


@dataclass
class BootstrapResult:
    samples: list
    x_eval: np.ndarray | None
    params: dict
    n: int

    @property
    def n_boot(self) -> int:
        return len(self.samples)

    def coef_array(self) -> np.ndarray:
        """Stacked coefficients, shape ``(n_boot, k+1, M, d)``."""
        return np.stack([s.coef for s in self.samples])


def _bootstrap_worker(args):
    estimator, X, curves, x_eval, seed, index, max_redraws = args
    rng = np.random.default_rng(seed)
    n = len(curves)
    last_error = None
    for _ in range(max_redraws + 1):
        rows = rng.integers(0, n, size=n)
        try:
            est = clone(estimator).fit(X[rows], [curves[i] for i in rows])
        except RankDeficientError as exc:
            last_error = exc
            continue
        oob = np.setdiff1d(np.arange(n), rows)
        preds = est.predict(x_eval) if x_eval is not None else []
        return BootstrapSample(index, rows, oob, est.coef_, preds)
    raise RankDeficientError(
        f"bootstrap replicate {index} rank deficient after "
        f"{max_redraws + 1} draws: {last_error}")


def bootstrap_fit(estimator, X, curves, n_boot: int, x_eval=None,
                  random_state=None, max_redraws: int = 5,
                  warm_start: bool = False, n_jobs: int = 1) -> BootstrapResult:
    """Case-resampled refits of the model.

    Each replicate draws ``n`` rows with replacement, refits from
    constant-speed initialization (or from the full-data coefficients
    when ``warm_start=True``) and records coefficients, predictions at
    ``x_eval`` and the out-of-bag rows.  Rank-deficient replicates are
    redrawn up to ``max_redraws`` times.
    """
    if n_boot < 1:
        raise ValueError("need n_boot >= 1")
    X, curves = check_X_curves(X, curves)
    if x_eval is not None:
        x_eval = np.atleast_2d(np.asarray(x_eval, dtype=float))
    base = clone(estimator)
    if warm_start:
        full = clone(estimator).fit(X, curves)
        if "warm_start_coef" in base.get_params():
            base.set_params(warm_start_coef=full.coef_)
    seeds = np.random.SeedSequence(random_state).spawn(n_boot)
    tasks = [(base, X, curves, x_eval, seeds[b], b, max_redraws)
             for b in range(n_boot)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            samples = list(pool.map(_bootstrap_worker, tasks, chunksize=2))
    else:
        samples = [_bootstrap_worker(t) for t in tasks]
    samples.sort(key=lambda s: s.index)
    return BootstrapResult(samples, x_eval, estimator.get_params(),
                           len(curves))


# ----------------------------------------------------------------------
# distance-based confidence regions
# ----------------------------------------------------------------------
def distance_confidence_region(result: BootstrapResult, x, alpha: float,
                               config: AlignConfig | None = None) -> list:
    """The ``ceil((1-alpha) * n_boot)`` bootstrap predictions closest to
    their elastic mean, each centered at its center of mass.

    Plotted together these approximate the generalized-hull confidence
    region for the prediction at ``x``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if result.x_eval is None:
        raise ValueError("bootstrap was run without prediction inputs")
    x = np.asarray(x, dtype=float).ravel()
    match = np.where(np.all(np.isclose(result.x_eval, x[None, :]), axis=1))[0]
    if match.size == 0:
        raise ValueError("x was not among the bootstrap prediction inputs")
    col = int(match[0])
    keep = int(np.ceil((1.0 - alpha) * result.n_boot))
    if keep < 1:
        raise InsufficientSamplesError("no curves left at this alpha")
    centered = [s.predictions[col].centered() for s in result.samples]
    p = result.params
    mean_curve = elastic_mean(
        centered, degree=p["degree"], n_knots=p["n_knots"],
        closed=p["closed"], eps=p["eps"], max_iter=p["max_iter"],
        n_grid=p["n_grid"])
    config = config or AlignConfig(n_grid=p["n_grid"])
    dists = np.array([elastic_distance(c, mean_curve, config)
                      for c in centered])
    order = np.argsort(dists, kind="stable")[:keep]
    return [centered[i] for i in sorted(order)]


# ----------------------------------------------------------------------
# coefficient-based confidence regions and tests
# ----------------------------------------------------------------------
@dataclass
class CoefEllipse:
    """Elliptical confidence region for one spline coefficient vector."""

    center: np.ndarray       # (d,)
    shape: np.ndarray        # (d, d) bootstrap covariance
    radius: float            # empirical quantile of studentized sample
    singular: bool = False

    def contains(self, xi) -> bool:
        diff = np.asarray(xi, dtype=float) - self.center
        return float(diff @ np.linalg.solve(self.shape, diff)) <= self.radius


@dataclass
class CoefInference:
    alpha: float
    ellipses: list                    # [(k+1)][M] CoefEllipse at level alpha
    coef_rejected: np.ndarray         # (k, M) individual coefficient tests
    covariate_rejected: np.ndarray    # (k,) joint tests at level alpha/M
    statistics: np.ndarray            # (k+1, M) studentized center norms
    dispersion_ratio: float


def _regularized(cov: np.ndarray):
    d = cov.shape[0]
    trace = float(np.trace(cov))
    sv = np.linalg.svd(cov, compute_uv=False) if d else np.array([1.0])
    if not d or sv[-1] > 1e-12 * max(sv[0], 1.0):
        return cov, False
    return cov + 1e-9 * max(trace, 1.0) * np.eye(d), True


def coef_confidence_regions(result: BootstrapResult,
                            alpha: float = 0.05) -> CoefInference:
    """Studentized bootstrap ellipses for every spline coefficient.

    Individual coefficients are tested at level ``alpha``; each
    covariate's joint test combines its coefficients with a Bonferroni
    correction ``alpha / M`` and rejects when any studentized center norm
    exceeds the corrected quantile.
    """
    if result.n_boot < 50:
        warnings.warn("fewer than 50 bootstrap samples; coefficient "
                      "regions will be unstable", stacklevel=2)
    coefs = result.coef_array()          # (B, k+1, M, d)
    B, k1, M, d = coefs.shape
    ellipses = []
    stats = np.zeros((k1, M))
    coef_rej = np.zeros((k1, M), dtype=bool)
    cov_rej = np.zeros(k1 - 1, dtype=bool)
    spread = []
    for j in range(k1):
        row = []
        for m in range(M):
            sample = coefs[:, j, m, :]
            center = sample.mean(axis=0)
            dev = sample - center
            cov = dev.T @ dev / (B - 1) if B > 1 else np.eye(d)
            cov, singular = _regularized(cov)
            stud = np.einsum("bi,ij,bj->b", dev, np.linalg.inv(cov), dev)
            c_alpha = float(np.quantile(stud, 1.0 - alpha,
                                        method=_QUANTILE_METHOD))
            c_bonf = float(np.quantile(stud, 1.0 - alpha / M,
                                       method=_QUANTILE_METHOD))
            stat = float(center @ np.linalg.solve(cov, center))
            stats[j, m] = stat
            row.append(CoefEllipse(center, cov, c_alpha, singular))
            if j >= 1:
                coef_rej[j, m] = stat >= c_alpha
                if stat >= c_bonf:
                    cov_rej[j - 1] = True
                spread.append(np.sqrt(np.trace(cov))
                              / (np.linalg.norm(center) + 1e-12))
        ellipses.append(row)
    dispersion = float(np.median(spread)) if spread else 0.0
    if dispersion > 1.0:
        warnings.warn(
            "bootstrap coefficient dispersion is large relative to the "
            "coefficient magnitudes; alignment variability may dominate, "
            "prefer distance-based confidence regions", stacklevel=2)
    return CoefInference(alpha, ellipses, coef_rej[1:], cov_rej, stats,
                         dispersion)


# ----------------------------------------------------------------------
# out-of-bootstrap model comparison
# ----------------------------------------------------------------------
def _oob_mse(est, X, curves, rows, config):
    preds = est.predict(X[rows])
    return float(np.mean([elastic_distance(curves[i], p, config) ** 2
                          for i, p in zip(rows, preds)]))


def _oob_worker(args):
    estimator, X, curves, subsets, seed, config = args
    rng = np.random.default_rng(seed)
    n = len(curves)
    rows = rng.integers(0, n, size=n)
    oob = np.setdiff1d(np.arange(n), rows)
    if oob.size == 0:
        return None
    boot_curves = [curves[i] for i in rows]
    try:
        full = clone(estimator).fit(X[rows], boot_curves)
        full_mse = _oob_mse(full, X, curves, oob, config)
        deltas = []
        for cols in subsets:
            cols = list(cols)
            sub = clone(estimator).fit(X[rows][:, cols], boot_curves)
            mse = _oob_mse(sub, X[:, cols], curves, oob, config)
            deltas.append(mse - full_mse)
        return deltas
    except RankDeficientError:
        return None


def oob_model_comparison(estimator, X, curves, subsets, n_boot: int = 200,
                         random_state=None, n_jobs: int = 1) -> list:
    """Compare reduced models against the full model out of bootstrap.

    ``subsets`` maps a label to the covariate column indices the reduced
    model keeps (the intercept is always included).  For each bootstrap
    replicate both models are refitted on the resample and their mean
    squared elastic distances are evaluated on the out-of-bag rows.

    Returns one dict per subset with the mean MSE difference (reduced
    minus full) and the fraction of replicates where dropping increased
    the error.
    """
    X, curves = check_X_curves(X, curves)
    labels = list(subsets.keys())
    cols = [subsets[label] for label in labels]
    config = AlignConfig(n_grid=estimator.get_params()["n_grid"])
    seeds = np.random.SeedSequence(random_state).spawn(n_boot)
    tasks = [(estimator, X, curves, cols, seeds[b], config)
             for b in range(n_boot)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(_oob_worker, tasks, chunksize=2))
    else:
        rows = [_oob_worker(t) for t in tasks]
    rows = [r for r in rows if r is not None]
    deltas = np.asarray(rows)  # (n_used, n_subsets)
    out = []
    for s, label in enumerate(labels):
        out.append({
            "subset": label,
            "mean_delta_mse": float(deltas[:, s].mean()),
            "frac_increase": float(np.mean(deltas[:, s] > 0.0)),
            "n_used": int(deltas.shape[0]),
        })
    return out
