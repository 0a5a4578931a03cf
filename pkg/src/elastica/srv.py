"""Square-root-velocity (SRV) transform, its inverse, and SRV-level functions.

The SRV transform maps a curve ``y`` to ``dy/dt / sqrt(||dy/dt||)`` (zero
where the derivative vanishes).  On polygons the transform is piecewise
constant and exactly invertible; spline-valued SRV functions are inverted
by fixed-order Gauss-Legendre quadrature per knot span.
"""

from __future__ import annotations

import numpy as np

from .basis import SplineFunction
from .curves import Curve
from .errors import DegeneratePredictionError, DimensionMismatchError

# 5-point Gauss-Legendre rule on [0, 1]
_GL5_X, _GL5_W = np.polynomial.legendre.leggauss(5)
_GL5_X = (_GL5_X + 1.0) / 2.0
_GL5_W = _GL5_W / 2.0


class PiecewiseConstantSrv:
    """SRV function that is constant on each cell of a breakpoint grid.

    Parameters
    ----------
    breakpoints : array of shape (n_cells + 1,)
        Strictly increasing, from 0 to 1.
    values : array of shape (n_cells, d)
        Function value on each cell.
    """

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints, values):
        bp = np.asarray(breakpoints, dtype=float)
        vals = np.atleast_2d(np.asarray(values, dtype=float))
        if bp.ndim != 1 or bp.size != vals.shape[0] + 1:
            raise ValueError("need one more breakpoint than cells")
        if bp[0] != 0.0 or bp[-1] != 1.0 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must increase strictly from 0 to 1")
        self.breakpoints = bp
        self.values = vals

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def n_cells(self) -> int:
        return self.values.shape[0]

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self.breakpoints, t, side="right") - 1,
                      0, self.n_cells - 1)
        return self.values[idx]

    def norm_sq(self) -> float:
        dt = np.diff(self.breakpoints)
        return float(np.sum(np.sum(self.values ** 2, axis=1) * dt))

    def scaled(self, factor: float) -> "PiecewiseConstantSrv":
        return PiecewiseConstantSrv(self.breakpoints, self.values * float(factor))

    def refined(self, extra_breakpoints) -> "PiecewiseConstantSrv":
        """Insert additional breakpoints without changing the function."""
        bp = np.union1d(self.breakpoints, np.asarray(extra_breakpoints, float))
        bp = bp[(bp >= 0.0) & (bp <= 1.0)]
        mids = 0.5 * (bp[1:] + bp[:-1])
        return PiecewiseConstantSrv(bp, self(mids))

    # -- alignment-target protocol ------------------------------------
    @property
    def breakpoint_hints(self) -> np.ndarray:
        return self.breakpoints

    def cell_means(self, lattice: np.ndarray) -> np.ndarray:
        """Exact per-cell means on a lattice containing all breakpoints."""
        mids = 0.5 * (lattice[1:] + lattice[:-1])
        return self(mids)

    def __repr__(self):
        return f"PiecewiseConstantSrv({self.n_cells} cells, d={self.dim})"


def srv_transform(curve: Curve) -> PiecewiseConstantSrv:
    """SRV transform of a polygonal curve (piecewise constant).

    On segment ``l`` the value is ``dy / sqrt(||dy|| * dt)``, the
    finite-difference derivative mapped through ``v -> v / sqrt(||v||)``.
    """
    dy = np.diff(curve.points, axis=0)
    dt = np.diff(curve.timestamps)
    norms = np.linalg.norm(dy, axis=1)
    vals = dy / np.sqrt(norms * dt)[:, None]
    return PiecewiseConstantSrv(curve.timestamps, vals)


def srv_inverse(srv, grid=100) -> Curve:
    """Invert the SRV transform: ``y(t) = integral_0^t q(s) ||q(s)|| ds``.

    The result is anchored at the origin (translation is quotiented out).
    Piecewise-constant SRVs invert exactly to their polygon; spline SRVs
    are integrated by 5-point Gauss-Legendre per knot span and sampled on
    ``grid`` equidistant points (or on a caller-supplied grid array).
    """
    if isinstance(srv, PiecewiseConstantSrv):
        dt = np.diff(srv.breakpoints)
        vel = srv.values * np.linalg.norm(srv.values, axis=1)[:, None]
        pts = np.vstack([np.zeros(srv.dim), np.cumsum(vel * dt[:, None], axis=0)])
        return Curve(pts, srv.breakpoints)
    ts = _output_grid(grid, _hints_of(srv))
    pts = _cumulative_speed_integral(srv, ts)
    return Curve(pts, ts)


def close_prediction(srv: SplineFunction, grid=100) -> Curve:
    """Project a spline SRV onto derivatives of closed curves and integrate.

    Returns ``t -> integral_0^t q||q|| ds - t * integral_0^1 q||q|| ds``
    sampled on the output grid; the last sample is forced equal to the
    first, so the closure gap is exactly zero.

    Raises
    ------
    DegeneratePredictionError
        If the projected curve collapses to a point (e.g. the SRV of a
        straight line, whose projection is annihilated).
    """
    ts = _output_grid(grid, _hints_of(srv))
    raw = _cumulative_speed_integral(srv, ts)
    total = raw[-1]
    pts = raw - np.outer(ts, total)
    pts[-1] = pts[0]
    extent = np.linalg.norm(pts - pts[0], axis=1).max()
    scale = max(np.linalg.norm(total), 1.0)
    if extent <= 1e-12 * scale:
        raise DegeneratePredictionError(
            "closing projection collapsed the prediction to a point"
        )
    return Curve(pts, ts, closed=True)


def _hints_of(srv):
    hints = getattr(srv, "breakpoint_hints", None)
    if hints is None and isinstance(srv, SplineFunction):
        hints = srv.basis.knots
    return hints


def _output_grid(grid, hints=None) -> np.ndarray:
    if np.isscalar(grid):
        ts = np.linspace(0.0, 1.0, int(grid))
    else:
        ts = np.asarray(grid, dtype=float)
        if ts[0] != 0.0 or ts[-1] != 1.0 or np.any(np.diff(ts) <= 0):
            raise ValueError("output grid must increase strictly from 0 to 1")
    if hints is not None:
        # keep kinks of the integrand exactly on the sampling grid
        hints = np.asarray(hints, dtype=float)
        ts = np.union1d(ts, hints[(hints >= 0.0) & (hints <= 1.0)])
    return ts


def _speed_nodes(srv, pieces: np.ndarray):
    """GL-5 nodes and weighted integrand values of ``q ||q||`` per piece."""
    starts, widths = pieces[:-1], np.diff(pieces)
    nodes = (starts[:, None] + widths[:, None] * _GL5_X[None, :]).ravel()
    q = srv(nodes)
    f = q * np.linalg.norm(q, axis=-1, keepdims=True)
    f = f.reshape(starts.size, _GL5_X.size, -1)
    return np.einsum("g,pgd->pd", _GL5_W, f) * widths[:, None]


def _cumulative_speed_integral(srv, ts: np.ndarray) -> np.ndarray:
    hints = getattr(srv, "breakpoint_hints", None)
    if hints is None and isinstance(srv, SplineFunction):
        hints = srv.basis.knots
    pieces = np.union1d(ts, hints) if hints is not None else ts
    contrib = _speed_nodes(srv, pieces)
    cum = np.vstack([np.zeros(contrib.shape[1]), np.cumsum(contrib, axis=0)])
    idx = np.searchsorted(pieces, ts)
    return cum[idx]


def integral_of_speed(srv) -> np.ndarray:
    """``integral_0^1 q(s) ||q(s)|| ds`` (the end point of the inverted curve)."""
    if isinstance(srv, PiecewiseConstantSrv):
        dt = np.diff(srv.breakpoints)
        vel = srv.values * np.linalg.norm(srv.values, axis=1)[:, None]
        return (vel * dt[:, None]).sum(axis=0)
    pieces = srv.basis.knots if isinstance(srv, SplineFunction) else np.linspace(0, 1, 201)
    return _speed_nodes(srv, pieces).sum(axis=0)


class ClosedPredictionSrv:
    """SRV of the closed projection of a spline prediction.

    For a spline SRV ``p`` with projected derivative
    ``v = p||p|| - integral p||p||``, this is ``v / sqrt(||v||)`` (zero
    where ``v`` vanishes).  Used as the warping target when fitting closed
    curves.
    """

    def __init__(self, spline: SplineFunction):
        self.spline = spline
        self.offset = integral_of_speed(spline)

    @property
    def dim(self) -> int:
        return self.spline.dim

    @property
    def breakpoint_hints(self) -> np.ndarray:
        return self.spline.basis.knots

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p = self.spline(t)
        v = p * np.linalg.norm(p, axis=-1, keepdims=True) - self.offset
        speed = np.linalg.norm(v, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(speed > 0.0, v / np.sqrt(speed), 0.0)
        return out

    def cell_means(self, lattice: np.ndarray) -> np.ndarray:
        starts, widths = lattice[:-1], np.diff(lattice)
        nodes = (starts[:, None] + widths[:, None] * _GL5_X[None, :]).ravel()
        vals = self(nodes).reshape(starts.size, _GL5_X.size, self.dim)
        return np.einsum("g,cgd->cd", _GL5_W, vals)

    def norm_sq(self) -> float:
        """``integral ||v|| dt`` by quadrature on a refined grid."""
        pieces = np.union1d(np.linspace(0.0, 1.0, 201), self.breakpoint_hints)
        starts, widths = pieces[:-1], np.diff(pieces)
        nodes = (starts[:, None] + widths[:, None] * _GL5_X[None, :]).ravel()
        p = self.spline(nodes)
        v = p * np.linalg.norm(p, axis=-1, keepdims=True) - self.offset
        speed = np.linalg.norm(v, axis=-1).reshape(starts.size, _GL5_X.size)
        return float(np.einsum("g,cg,c->", _GL5_W, speed, widths))


class SplineCurveSrv:
    """SRV of a curve-level spline: ``y' / sqrt(||y'||)`` for spline ``y``.

    Used as the warping target when models are fitted on curve level.
    """

    def __init__(self, curve_spline: SplineFunction):
        self.velocity = curve_spline.derivative()

    @property
    def dim(self) -> int:
        return self.velocity.dim

    @property
    def breakpoint_hints(self) -> np.ndarray:
        return self.velocity.basis.knots

    def __call__(self, t) -> np.ndarray:
        v = self.velocity(np.atleast_1d(np.asarray(t, dtype=float)))
        speed = np.linalg.norm(v, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(speed > 0.0, v / np.sqrt(speed), 0.0)

    def cell_means(self, lattice: np.ndarray) -> np.ndarray:
        starts, widths = lattice[:-1], np.diff(lattice)
        nodes = (starts[:, None] + widths[:, None] * _GL5_X[None, :]).ravel()
        vals = self(nodes).reshape(starts.size, _GL5_X.size, self.dim)
        return np.einsum("g,cgd->cd", _GL5_W, vals)

    def norm_sq(self) -> float:
        """``integral ||y'|| dt``, the length of the spline curve."""
        pieces = np.union1d(np.linspace(0.0, 1.0, 201), self.breakpoint_hints)
        starts, widths = pieces[:-1], np.diff(pieces)
        nodes = (starts[:, None] + widths[:, None] * _GL5_X[None, :]).ravel()
        speed = np.linalg.norm(self.velocity(nodes), axis=-1)
        speed = speed.reshape(starts.size, _GL5_X.size)
        return float(np.einsum("g,cg,c->", _GL5_W, speed, widths))


def spline_cell_means(fun: SplineFunction, lattice: np.ndarray) -> np.ndarray:
    """Exact per-cell means of a spline on an arbitrary lattice."""
    anti = fun.antiderivative_at(lattice)
    widths = np.diff(lattice)
    return (anti[1:] - anti[:-1]) / widths[:, None]


def srv_convex_combination(qa: PiecewiseConstantSrv, qb: PiecewiseConstantSrv,
                           weight: float) -> PiecewiseConstantSrv:
    """``(1 - w) qa + w qb`` on the refined common breakpoint grid."""
    if qa.dim != qb.dim:
        raise DimensionMismatchError("SRV functions have different dimensions")
    bp = np.union1d(qa.breakpoints, qb.breakpoints)
    mids = 0.5 * (bp[1:] + bp[:-1])
    return PiecewiseConstantSrv(bp, (1.0 - weight) * qa(mids) + weight * qb(mids))
