"""Exact L2 least squares for function-on-scalar spline models.

The response data are piecewise-constant SRV functions (or piecewise-linear
curves for the curve-level baselines).  All inner products against the
spline basis are exact integrals, so the normal equations minimize the true
L2 risk and the fitted loss is the global minimum over the model space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import SplineBasis
from .curves import Curve
from .errors import RankDeficientError
from .srv import PiecewiseConstantSrv

_GL3_X = (np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)]) + 1.0) / 2.0
_GL3_W = np.array([5.0, 8.0, 5.0]) / 18.0


@dataclass
class ObsData:
    """Exact L2 summaries of one response function against a basis."""

    moments: np.ndarray  # (M, d): integral of B_m times the response
    norm_sq: float       # squared L2 norm of the response
    lost: float = 0.0    # SRV mass lost to collapsed segments


def srv_obs_data(basis: SplineBasis, srv: PiecewiseConstantSrv,
                 lost: float = 0.0) -> ObsData:
    anti = basis.design_antiderivative(srv.breakpoints)
    moments = (anti[1:] - anti[:-1]).T @ srv.values
    return ObsData(moments, srv.norm_sq(), lost)


def curve_obs_data(basis: SplineBasis, curve: Curve) -> ObsData:
    """Exact summaries of a piecewise-linear curve (for curve-level fits)."""
    pieces = np.union1d(curve.timestamps, basis.knots)
    starts, widths = pieces[:-1], np.diff(pieces)
    nodes = (starts[:, None] + widths[:, None] * _GL3_X[None, :]).ravel()
    D = basis.design(nodes)
    Y = curve(nodes)
    w = (widths[:, None] * _GL3_W[None, :]).ravel()
    moments = (D * w[:, None]).T @ Y
    # exact norm of the interpolant, segment by segment
    p0, p1 = curve.points[:-1], curve.points[1:]
    dt = np.diff(curve.timestamps)
    norm_sq = float(np.sum(dt * (np.sum(p0 * p0, axis=1)
                                 + np.sum(p0 * p1, axis=1)
                                 + np.sum(p1 * p1, axis=1)) / 3.0))
    return ObsData(moments, norm_sq)


def design_with_intercept(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("covariates must form a 2-d array")
    return np.column_stack([np.ones(X.shape[0]), X])


def check_full_rank(Xd: np.ndarray, ridge: float = 0.0) -> None:
    """Raise RankDeficientError naming the colliding design columns."""
    if Xd.shape[0] < Xd.shape[1]:
        raise RankDeficientError(
            f"need at least {Xd.shape[1]} observations for "
            f"{Xd.shape[1] - 1} covariates", columns=list(range(Xd.shape[1])))
    if ridge > 0.0:
        return
    sv = scipy.linalg.svdvals(Xd)
    if sv[-1] <= 1e-10 * max(sv[0], 1.0):
        _, _, piv = scipy.linalg.qr(Xd, mode="economic", pivoting=True)
        rank = int(np.sum(sv > 1e-10 * max(sv[0], 1.0)))
        raise RankDeficientError(
            "design matrix is rank deficient", columns=sorted(piv[rank:]))


def solve_normal_equations(Xd: np.ndarray, obs: list[ObsData],
                           basis: SplineBasis, ridge: float = 0.0) -> np.ndarray:
    """Global least-squares coefficients, shape ``(k+1, M, d)``.

    Solves ``argmin sum_i || sum_j Xd_ij beta_j - w_i ||^2`` exactly; the
    Kronecker structure lets the covariate and basis directions be solved
    one after the other.
    """
    check_full_rank(Xd, ridge)
    XtX = Xd.T @ Xd
    if ridge > 0.0:
        XtX = XtX + ridge * np.eye(XtX.shape[0])
    B = np.stack([o.moments for o in obs])          # (n, M, d)
    rhs = np.einsum("ij,imd->jmd", Xd, B)           # (k+1, M, d)
    k1, M, d = rhs.shape
    try:
        cx = scipy.linalg.cho_factor(XtX)
        cg = scipy.linalg.cho_factor(basis.gram)
    except scipy.linalg.LinAlgError as exc:
        raise RankDeficientError(str(exc)) from exc
    out = scipy.linalg.cho_solve(cx, rhs.reshape(k1, M * d))
    out = scipy.linalg.cho_solve(cg, out.reshape(k1, M, d).transpose(1, 0, 2)
                                 .reshape(M, k1 * d))
    return out.reshape(M, k1, d).transpose(1, 0, 2)


def predictor_coefs(Xd: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Per-observation predictor spline coefficients, shape ``(n, M, d)``."""
    return np.einsum("ij,jmd->imd", Xd, coef)


def observation_loss(pred_coef: np.ndarray, o: ObsData,
                     gram: np.ndarray) -> float:
    """Exact ``|| predictor - response ||^2`` plus unmatched mass."""
    cross = float(np.sum(pred_coef * o.moments))
    quad = float(np.einsum("md,mn,nd->", pred_coef, gram, pred_coef))
    return o.norm_sq + o.lost - 2.0 * cross + quad


def total_loss(Xd: np.ndarray, coef: np.ndarray, obs: list[ObsData],
               gram: np.ndarray) -> float:
    P = predictor_coefs(Xd, coef)
    loss = 0.0
    for i, o in enumerate(obs):
        loss += observation_loss(P[i], o, gram)
    return loss


def max_coef_change_sq(old: np.ndarray, new: np.ndarray,
                       gram: np.ndarray) -> float:
    """``max_j || beta_j_old - beta_j_new ||^2`` exactly via the Gram matrix."""
    diff = new - old
    per_j = np.einsum("jmd,mn,jnd->j", diff, gram, diff)
    return float(per_j.max())


def fit_weighted_mean(obs: list[ObsData], weights: np.ndarray,
                      basis: SplineBasis) -> np.ndarray:
    """Weighted L2 spline mean via the pseudo-data reduction.

    Because the weights average to one, ``argmin sum_i s_i ||p - w_i||^2``
    coincides with the unweighted fit to the pseudo data ``s_i w_i``.
    Returns coefficients of shape ``(M, d)``.
    """
    weights = np.asarray(weights, dtype=float)
    pseudo = [ObsData(o.moments * s, o.norm_sq * s * s, 0.0)
              for o, s in zip(obs, weights)]
    Xd = np.ones((len(obs), 1))
    return solve_normal_equations(Xd, pseudo, basis)[0]


def fit_weighted_mean_direct(obs: list[ObsData], weights: np.ndarray,
                             basis: SplineBasis) -> np.ndarray:
    """Reference implementation solving the weighted normal equations."""
    weights = np.asarray(weights, dtype=float)
    rhs = np.zeros_like(obs[0].moments)
    for o, s in zip(obs, weights):
        rhs += s * o.moments
    total = float(weights.sum())
    return scipy.linalg.solve(total * basis.gram, rhs, assume_a="pos")
