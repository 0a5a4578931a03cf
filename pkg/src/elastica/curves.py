"""Curve and warping representations.

A :class:`Curve` is an ordered point sequence in ``R^d`` together with
strictly increasing parameter timestamps in ``[0, 1]``, interpreted as the
piecewise-linear interpolant.  A :class:`Warping` is a monotone
piecewise-linear bijection of ``[0, 1]``.  Both are immutable after
construction and safe to share between threads.
"""

from __future__ import annotations

import numpy as np

from .errors import AllPointsIdenticalError, DimensionMismatchError

_MERGE_TOL = 0.0  # consecutive points are merged only when exactly equal


class Curve:
    """Polygonal curve ``[0, 1] -> R^d``.

    Parameters
    ----------
    points : array-like of shape (n_points, d)
        Ordered vertices, ``d >= 1``, ``n_points >= 2`` after merging
        consecutive duplicates.
    timestamps : array-like of shape (n_points,), optional
        Strictly increasing, first 0 and last 1.  If omitted, a constant
        speed (arc-length proportional) parametrization is used.
    closed : bool, default=False
        Marks the curve as closed.  The constructor does not force
        closure; use :func:`polygon_from_points` for that.
    """

    __slots__ = ("points", "timestamps", "closed")

    def __init__(self, points, timestamps=None, closed=False):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ValueError("need at least two points")
        if timestamps is None:
            ts = _constant_speed_timestamps(pts)
            keep = np.ones(pts.shape[0], dtype=bool)
            keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
            pts, ts = pts[keep], ts[keep]
        else:
            ts = np.asarray(timestamps, dtype=float)
            if ts.shape != (pts.shape[0],):
                raise ValueError("timestamps must match the number of points")
            pts, ts = _merge_duplicates(pts, ts)
            if ts[0] != 0.0 or ts[-1] != 1.0 or np.any(np.diff(ts) <= 0):
                raise ValueError(
                    "timestamps must be strictly increasing from 0 to 1"
                )
        if pts.shape[0] < 2:
            raise AllPointsIdenticalError("all points are identical")
        if closed and not np.array_equal(pts[0], pts[-1]):
            raise ValueError("closed curve must end at its start point")
        pts.setflags(write=False)
        ts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "closed", bool(closed))

    def __setattr__(self, name, value):
        raise AttributeError("Curve is immutable")

    def __reduce__(self):
        return (Curve, (np.asarray(self.points), np.asarray(self.timestamps),
                        self.closed))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def length(self) -> float:
        """Total Euclidean arc length."""
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))

    def __call__(self, t):
        """Evaluate the piecewise-linear interpolant at parameter(s) ``t``."""
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (self.dim,))
        for j in range(self.dim):
            out[..., j] = np.interp(t, self.timestamps, self.points[:, j])
        return out

    def translated(self, offset) -> "Curve":
        return Curve(self.points + np.asarray(offset, dtype=float),
                     self.timestamps, closed=self.closed)

    def anchored(self) -> "Curve":
        """Translate so the first vertex sits at the origin."""
        return self.translated(-self.points[0])

    def centroid(self) -> np.ndarray:
        """Parameter-uniform center of mass ``integral of y(t) dt``."""
        dt = np.diff(self.timestamps)
        mids = 0.5 * (self.points[1:] + self.points[:-1])
        return (mids * dt[:, None]).sum(axis=0)

    def centered(self) -> "Curve":
        return self.translated(-self.centroid())

    def __repr__(self):
        tag = "closed" if self.closed else "open"
        return f"Curve({self.n_points} points, d={self.dim}, {tag})"


def _constant_speed_timestamps(points: np.ndarray) -> np.ndarray:
    seglen = np.linalg.norm(np.diff(points, axis=0), axis=1)
    total = seglen.sum()
    if total <= 0.0:
        raise AllPointsIdenticalError("all points are identical")
    ts = np.concatenate(([0.0], np.cumsum(seglen) / total))
    ts[-1] = 1.0
    return ts


def _merge_duplicates(points, timestamps):
    keep = np.ones(points.shape[0], dtype=bool)
    keep[1:] = np.any(points[1:] != points[:-1], axis=1)
    pts = points[keep]
    # keep the first timestamp of each run so t=0 survives
    ts = timestamps[keep].copy()
    if not keep[-1]:
        # a trailing run was merged; the final vertex must still sit at t=1
        ts[-1] = timestamps[-1]
    return pts, ts


def polygon_from_points(points, closed=False) -> Curve:
    """Connect observed points linearly with constant-speed timestamps.

    Consecutive duplicate points are merged.  For ``closed=True`` the first
    point is appended when the polygon does not already return to it.

    Raises
    ------
    AllPointsIdenticalError
        If every point equals the first one.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if closed and not np.array_equal(pts[0], pts[-1]):
        pts = np.vstack([pts, pts[0]])
    keep = np.ones(pts.shape[0], dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    pts = pts[keep]
    if pts.shape[0] < 2:
        raise AllPointsIdenticalError("all points are identical")
    return Curve(pts, closed=closed)


class Warping:
    """Monotone piecewise-linear bijection of ``[0, 1]``.

    Stored as knots ``(s, gamma(s))`` with both coordinates strictly
    increasing, ``gamma(0) = 0`` and ``gamma(1) = 1``.
    """

    __slots__ = ("s", "values")

    def __init__(self, s, values):
        s = np.asarray(s, dtype=float)
        v = np.asarray(values, dtype=float)
        if s.shape != v.shape or s.ndim != 1 or s.size < 2:
            raise ValueError("knots must be two 1-d arrays of equal length")
        if s[0] != 0.0 or s[-1] != 1.0 or v[0] != 0.0 or v[-1] != 1.0:
            raise ValueError("warping must map (0, 1) onto (0, 1)")
        if np.any(np.diff(s) <= 0) or np.any(np.diff(v) <= 0):
            raise ValueError("warping knots must be strictly increasing")
        s.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", v)

    def __setattr__(self, name, value):
        raise AttributeError("Warping is immutable")

    def __reduce__(self):
        return (Warping, (np.asarray(self.s), np.asarray(self.values)))

    @classmethod
    def identity(cls) -> "Warping":
        return cls([0.0, 1.0], [0.0, 1.0])

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.s, self.values)

    def inverse(self) -> "Warping":
        """Exact piecewise-linear inverse (swap knot coordinates)."""
        return Warping(self.values, self.s)

    def compose(self, other: "Warping") -> "Warping":
        """Return ``self o other`` as an exact piecewise-linear warping."""
        knots = np.union1d(other.s, other.inverse()(self.s))
        return Warping(knots, self(other(knots)))

    def __repr__(self):
        return f"Warping({self.s.size} knots)"


def apply_warping(curve: Curve, warping: Warping) -> Curve:
    """Re-parametrize ``curve`` by ``warping`` without changing its image.

    Returns the curve ``y o w``: every original vertex at time ``t`` moves to
    time ``w^{-1}(t)``, and additional vertices are inserted at the warping's
    own knots so the result is exactly piecewise linear.
    """
    winv = warping.inverse()
    new_ts = np.union1d(winv(curve.timestamps), warping.s)
    pts = curve(warping(new_ts))
    return Curve(pts, new_ts, closed=curve.closed)


def resample_curve(curve: Curve, n: int) -> Curve:
    """Evaluate ``curve`` at ``n`` equidistant parameter values."""
    ts = np.linspace(0.0, 1.0, n)
    return Curve(curve(ts), closed=curve.closed)


def check_same_dimension(a: Curve, b: Curve) -> int:
    if a.dim != b.dim:
        raise DimensionMismatchError(
            f"curves live in R^{a.dim} and R^{b.dim}"
        )
    return a.dim
