"""Data generators for the benchmark scenarios and the coefficient-test study.

Three scenario families with built-in template shapes (versioned CSV data
files; user templates can be substituted):

1. Smooth open shapes; the covariate moves along the geodesic between the
   aligned templates (linear on SRV level).  First-order Gaussian random
   walk noise is added to the SRV vectors.
2. As scenario 1, but the second template lacks a sharp notch feature that
   only exists at ``x = -1`` and the templates are deliberately not
   aligned, so pre-alignment to the mean mismatches the feature.
3. Closed quadratic-spline templates interpolated linearly on curve level,
   with the random walk added directly to the selected points.

The ``coef-test`` family draws three uniform covariates and samples points
on SRV-linear spline curves where the third covariate has no effect and
the second only acts on the first part of the curve.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .alignment import AlignConfig, align_to_target, elastic_distance
from .basis import SplineBasis, SplineFunction
from .curves import Curve, polygon_from_points
from .dataset import Dataset
from .errors import DimensionMismatchError
from .regression import (FrechetCurveRegression, IterateCurveRegression,
                         PrealignCurveRegression, PrealignSRVRegression,
                         QuotientCurveRegression)
from .srv import (PiecewiseConstantSrv, srv_convex_combination, srv_inverse,
                  srv_transform)

TEMPLATE_VERSION = 1

_TABLE_DEFAULTS = {
    "1": {"sd": 0.4, "sd_choices": (0.4, 0.8)},
    "2": {"sd": 0.2, "sd_choices": (0.2, 0.4)},
    "3": {"sd": 0.1, "sd_choices": (0.1, 0.2)},
}


@dataclass
class ScenarioSpec:
    """Settings of one simulation scenario.

    ``kappa_range`` bounds the number of observed points per curve
    (inclusive); the benchmark defaults are ``(15, 20)`` and ``(30, 40)``.
    """

    scenario: str = "1"
    sd: float | None = None
    kappa_range: tuple = (15, 20)
    n: int = 11
    seed: int | None = None
    n_knots: int | None = None
    templates: dict = field(default_factory=dict)

    def __post_init__(self):
        self.scenario = str(self.scenario)
        if self.scenario not in ("1", "2", "3", "coef-test"):
            raise ValueError("scenario must be 1, 2, 3 or coef-test")
        if self.sd is None:
            self.sd = _TABLE_DEFAULTS.get(self.scenario, {}).get("sd", 0.0)
        if self.sd < 0:
            raise ValueError("sd must be nonnegative")
        lo, hi = self.kappa_range
        if not (3 <= lo <= hi <= 51):
            raise ValueError("kappa_range must lie within [3, 51]")


def _load_template(name: str) -> np.ndarray:
    path = resources.files("elastica").joinpath(f"data/{name}.csv")
    with path.open("r") as f:
        return np.loadtxt(f, delimiter=",", skiprows=2, comments="#")


def _template_pair(spec: ScenarioSpec):
    if "a" in spec.templates and "b" in spec.templates:
        return np.asarray(spec.templates["a"]), np.asarray(spec.templates["b"])
    a = _load_template(f"scenario{spec.scenario}_a")
    b = _load_template(f"scenario{spec.scenario}_b")
    return a, b


def geodesic_interpolate(a: Curve, b: Curve, x: float) -> PiecewiseConstantSrv:
    """Convex SRV combination ``(1-w) Q(a) + w Q(b)`` with ``w = (x+1)/2``."""
    if a.dim != b.dim:
        raise DimensionMismatchError("curves live in different dimensions")
    if not -1.0 <= x <= 1.0:
        raise ValueError("x must lie in [-1, 1]")
    return srv_convex_combination(srv_transform(a), srv_transform(b),
                                  (x + 1.0) / 2.0)


def _select_points(rng, n_total: int, kappa: int, keep_first_last: bool):
    if keep_first_last:
        interior = rng.choice(np.arange(1, n_total - 1), size=kappa - 2,
                              replace=False)
        return np.sort(np.concatenate(([0], interior, [n_total - 1])))
    others = rng.choice(np.arange(1, n_total), size=kappa - 1, replace=False)
    return np.sort(np.concatenate(([0], others)))


def _random_walk(rng, n: int, dim: int, sd: float) -> np.ndarray:
    # anchored at zero: the l-th error is the sum of the first l+1 increments
    return np.cumsum(rng.normal(0.0, sd, size=(n, dim)), axis=0)


def _open_scenario_curves(spec: ScenarioSpec, rng, xs) -> list:
    a, b = _template_pair(spec)
    qa = srv_transform(polygon_from_points(a))
    qb = srv_transform(polygon_from_points(b))
    if spec.scenario == "1":
        # the geodesic scenario interpolates between aligned representatives
        res = align_to_target(qb, qa, AlignConfig(n_grid=400),
                              profile="optimal")
        qb = res.warped_srv
    grid = np.linspace(0.0, 1.0, 51)
    dt = grid[1] - grid[0]
    curves = []
    for x in xs:
        q = srv_convex_combination(qa, qb, (x + 1.0) / 2.0)
        pts = srv_inverse(q)(grid)
        dy = np.diff(pts, axis=0)
        v = dy / dt
        speed = np.linalg.norm(v, axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            q_vec = np.where(speed > 0, v / np.sqrt(speed), 0.0)
        q_vec = q_vec + _random_walk(rng, 50, pts.shape[1], spec.sd)
        vel = q_vec * np.linalg.norm(q_vec, axis=1, keepdims=True)
        noisy = np.vstack([pts[0], pts[0] + np.cumsum(vel * dt, axis=0)])
        kappa = int(rng.integers(spec.kappa_range[0],
                                 spec.kappa_range[1] + 1))
        sel = _select_points(rng, 51, kappa, keep_first_last=True)
        curves.append(polygon_from_points(noisy[sel]))
    return curves


def _closed_scenario_curves(spec: ScenarioSpec, rng, xs) -> list:
    ca, cb = _template_pair(spec)
    basis = SplineBasis(2, ca.shape[0] + 1, periodic=True)
    fa, fb = SplineFunction(basis, ca), SplineFunction(basis, cb)
    grid = np.linspace(0.0, 1.0, 51)[:-1]  # distinct points of the loop
    curves = []
    for x in xs:
        w = (x + 1.0) / 2.0
        pts = (1.0 - w) * fa(grid) + w * fb(grid)
        kappa = int(rng.integers(spec.kappa_range[0],
                                 spec.kappa_range[1] + 1))
        sel = _select_points(rng, 50, kappa, keep_first_last=False)
        noisy = pts[sel] + _random_walk(rng, sel.size, pts.shape[1], spec.sd)
        curves.append(polygon_from_points(noisy, closed=True))
    return curves


def _coef_test_data(spec: ScenarioSpec, rng):
    table = _load_template("coef_test_beta") if not spec.templates else \
        np.asarray(spec.templates["beta"])
    basis6 = SplineBasis(1, 6)
    xi = np.zeros((3, 6, 2))
    for j, m, c1, c2 in table:
        xi[int(j), int(m)] = (c1, c2)
    n_knots = spec.n_knots or 6
    if n_knots == 6:
        basis, coefs = basis6, xi
    else:
        # exact refinement: coarse hats are piecewise linear on any finer
        # equidistant grid that contains the coarse knots
        basis = SplineBasis(1, n_knots)
        fine = np.stack([basis6.design(basis.knots) @ xi[j]
                         for j in range(3)])
        coefs = fine
    X = rng.uniform(-1.0, 1.0, size=(spec.n, 3))
    curves = []
    for x in X:
        f = SplineFunction(basis, coefs[0] + x[0] * coefs[1] + x[1] * coefs[2])
        dense = srv_inverse(f, grid=51)
        kappa = int(rng.integers(10, 16))
        sel = _select_points(rng, dense.n_points, kappa, keep_first_last=True)
        curves.append(polygon_from_points(dense.points[sel]))
    return X, curves


def generate_scenario(spec: ScenarioSpec, with_test: bool = True):
    """Generate a training dataset (and a held-out test set drawn the same
    way) for the given scenario.  Pure function of ``(spec, seed)``."""
    rng = np.random.default_rng(spec.seed)

    def one(sub_rng):
        if spec.scenario == "coef-test":
            X, curves = _coef_test_data(spec, sub_rng)
            return Dataset(X, curves, ["x1", "x2", "x3"])
        xs = np.linspace(-1.0, 1.0, spec.n)
        if spec.scenario == "3":
            curves = _closed_scenario_curves(spec, sub_rng, xs)
            return Dataset(xs[:, None], curves, ["x"], closed=True)
        curves = _open_scenario_curves(spec, sub_rng, xs)
        return Dataset(xs[:, None], curves, ["x"])

    train = one(rng)
    if not with_test:
        return train
    return train, one(rng)


# ----------------------------------------------------------------------
# benchmark harness
# ----------------------------------------------------------------------
METHODS = ("quotient", "prealign-srv", "iterate-curve", "prealign-curve",
           "frechet")

_SCENARIO_BASES = {
    # degree / knots per the benchmark protocol: smooth open scenarios use
    # linear SRV splines, the cornered scenario constant SRV splines, the
    # closed scenario periodic linear SRV splines
    "1": {"degree": 1, "n_knots": 11, "closed": False},
    "2": {"degree": 0, "n_knots": 51, "closed": False},
    "3": {"degree": 1, "n_knots": 21, "closed": True},
    "coef-test": {"degree": 1, "n_knots": 6, "closed": False},
}


def method_estimator(method: str, scenario: str = "1", **overrides):
    """The estimator a benchmark scenario uses for the given method."""
    base = dict(_SCENARIO_BASES[str(scenario)])
    base.update(overrides)
    if method == "quotient":
        return QuotientCurveRegression(**base)
    if method == "prealign-srv":
        return PrealignSRVRegression(**base)
    if method == "prealign-curve":
        return PrealignCurveRegression(**base)
    if method == "iterate-curve":
        return IterateCurveRegression(**base)
    if method == "frechet":
        return FrechetCurveRegression(**base)
    raise ValueError(f"unknown method {method!r}")


def _score_method(method, spec, train, test, overrides):
    est = method_estimator(method, spec.scenario, **overrides)
    t0 = time.perf_counter()
    est.fit(train.X, train.curves)
    preds = est.predict(test.X)
    elapsed = time.perf_counter() - t0
    cfg = AlignConfig(n_grid=est.get_params()["n_grid"])
    mse = float(np.mean([elastic_distance(c, p, cfg) ** 2
                         for c, p in zip(test.curves, preds)]))
    return mse, elapsed


def run_benchmark(spec: ScenarioSpec, methods=METHODS, replicates: int = 20,
                  seed=None, **overrides) -> list:
    """Out-of-sample mean squared elastic distance per method.

    Each replicate draws fresh train and test datasets, fits every method
    on the training set and scores it on the test set.  Failures are
    recorded and excluded from the averages.
    """
    seeds = np.random.SeedSequence(seed).spawn(replicates)
    table = {m: {"mse": [], "time": [], "failures": 0} for m in methods}
    for r in range(replicates):
        rep_spec = ScenarioSpec(spec.scenario, spec.sd, spec.kappa_range,
                                spec.n, seeds[r], spec.n_knots,
                                spec.templates)
        train, test = generate_scenario(rep_spec)
        for m in methods:
            try:
                mse, elapsed = _score_method(m, rep_spec, train, test,
                                             overrides)
            except Exception:
                table[m]["failures"] += 1
                continue
            table[m]["mse"].append(mse)
            table[m]["time"].append(elapsed)
    rows = []
    for m in methods:
        mses = np.asarray(table[m]["mse"])
        rows.append({
            "method": m,
            "mse_mean": float(mses.mean()) if mses.size else float("nan"),
            "mse_sd": float(mses.std(ddof=1)) if mses.size > 1 else 0.0,
            "time_mean": float(np.mean(table[m]["time"])) if table[m]["time"]
            else float("nan"),
            "replicates_used": int(mses.size),
            "failures": table[m]["failures"],
        })
    return rows
