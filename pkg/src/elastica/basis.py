"""B-spline bases on equidistant knots, open (clamped) or periodic.

Degrees 0, 1 and 2 are supported.  All integrals (antiderivatives, Gram
matrices) are computed with fixed 3-point Gauss-Legendre rules per knot
span, which is exact for the polynomial pieces involved (degree <= 4
products).
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .errors import OutOfDomainError

# 3-point Gauss-Legendre nodes/weights on [0, 1]
_GL3_X = (np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)]) + 1.0) / 2.0
_GL3_W = np.array([5.0, 8.0, 5.0]) / 18.0

_DOMAIN_TOL = 1e-12


class SplineBasis:
    """Equidistant B-spline basis on ``[0, 1]``.

    Parameters
    ----------
    degree : {0, 1, 2}
        Polynomial degree of the pieces.
    n_knots : int
        Number of equidistant knots including both endpoints (so the
        domain splits into ``n_knots - 1`` spans).
    periodic : bool, default=False
        Wrap the basis around the circle ``0 ~ 1``.

    Notes
    -----
    The basis size is ``n_knots + degree - 1`` for open bases and
    ``n_knots - 1`` for periodic ones.  Basis functions are nonnegative
    and sum to one everywhere.
    """

    def __init__(self, degree: int, n_knots: int, periodic: bool = False):
        if degree not in (0, 1, 2):
            raise ValueError("degree must be 0, 1 or 2")
        if n_knots < 2:
            raise ValueError("need at least two knots")
        if periodic and n_knots < degree + 2:
            raise ValueError("too few knots for a periodic basis")
        self.degree = int(degree)
        self.n_knots = int(n_knots)
        self.periodic = bool(periodic)
        self.knots = np.linspace(0.0, 1.0, n_knots)
        self.h = 1.0 / (n_knots - 1)
        if periodic:
            self.size = n_knots - 1
        else:
            self.size = n_knots + degree - 1

    # -- equality / hashing so bases can key caches and serialize cheaply --
    def _key(self):
        return (self.degree, self.n_knots, self.periodic)

    def __eq__(self, other):
        return isinstance(other, SplineBasis) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        kind = "periodic" if self.periodic else "open"
        return (f"SplineBasis(degree={self.degree}, n_knots={self.n_knots}, "
                f"{kind}, size={self.size})")

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------
    def design(self, t) -> np.ndarray:
        """Evaluate all basis functions: returns shape ``(len(t), size)``.

        Raises
        ------
        OutOfDomainError
            If any ``t`` lies outside ``[0, 1]``.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < -_DOMAIN_TOL) or np.any(t > 1.0 + _DOMAIN_TOL):
            raise OutOfDomainError("evaluation points must lie in [0, 1]")
        t = np.clip(t, 0.0, 1.0)
        if self.periodic:
            return self._design_periodic(t)
        return self._design_open(t)

    def _design_open(self, t: np.ndarray) -> np.ndarray:
        p, K = self.degree, self.n_knots
        tau = np.concatenate([np.zeros(p), self.knots, np.ones(p)])
        cell = np.minimum((t * (K - 1)).astype(int), K - 2)
        span = cell + p  # tau[span] <= t < tau[span+1]
        # de Boor triangular scheme; N holds the p+1 nonzero values
        N = np.zeros((t.size, p + 1))
        N[:, 0] = 1.0
        for r in range(1, p + 1):
            saved = np.zeros(t.size)
            for j in range(r):
                denom = tau[span + j + 1] - tau[span + j + 1 - r]
                term = np.where(denom > 0.0,
                                N[:, j] / np.where(denom > 0.0, denom, 1.0),
                                0.0)
                N[:, j] = saved + (tau[span + j + 1] - t) * term
                saved = (t - tau[span + j + 1 - r]) * term
            N[:, r] = saved
        out = np.zeros((t.size, self.size))
        cols = span[:, None] - p + np.arange(p + 1)[None, :]
        np.put_along_axis(out, cols, N, axis=1)
        return out

    def _design_periodic(self, t: np.ndarray) -> np.ndarray:
        p, P = self.degree, self.size
        u = t / self.h  # position in cell units, in [0, P]
        out = np.zeros((t.size, P))
        cell = np.minimum(u.astype(int), P - 1)
        frac = u - cell
        # basis m covers cells m .. m+p (mod P); on cell c the contributing
        # bases are m = c-p .. c, with local argument frac + (c - m)
        for offset in range(p + 1):
            m = (cell - offset) % P
            vals = _cardinal(frac + offset, p)
            np.add.at(out, (np.arange(t.size), m), vals)
        return out

    # ------------------------------------------------------------------
    # integrals
    # ------------------------------------------------------------------
    @cached_property
    def _cell_cumulative(self) -> np.ndarray:
        """``(n_knots, size)``: integral of each basis over cells left of knot j."""
        starts = self.knots[:-1]
        nodes = (starts[:, None] + self.h * _GL3_X[None, :]).ravel()
        D = self.design(nodes).reshape(self.n_knots - 1, 3, self.size)
        per_cell = self.h * np.einsum("g,cgm->cm", _GL3_W, D)
        out = np.zeros((self.n_knots, self.size))
        np.cumsum(per_cell, axis=0, out=out[1:])
        return out

    def design_antiderivative(self, t) -> np.ndarray:
        """Exact ``integral_0^t B_m`` for every basis function, shape ``(len(t), size)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < -_DOMAIN_TOL) or np.any(t > 1.0 + _DOMAIN_TOL):
            raise OutOfDomainError("evaluation points must lie in [0, 1]")
        t = np.clip(t, 0.0, 1.0)
        cell = np.minimum((t * (self.n_knots - 1)).astype(int), self.n_knots - 2)
        start = self.knots[cell]
        width = t - start
        nodes = (start[:, None] + width[:, None] * _GL3_X[None, :]).ravel()
        D = self.design(nodes).reshape(t.size, 3, self.size)
        partial = width[:, None] * np.einsum("g,tgm->tm", _GL3_W, D)
        return self._cell_cumulative[cell] + partial

    def integrals(self) -> np.ndarray:
        """``integral_0^1 B_m`` for every basis function."""
        return self._cell_cumulative[-1].copy()

    @cached_property
    def gram(self) -> np.ndarray:
        """Exact Gram matrix ``integral B_m B_m'``, shape ``(size, size)``."""
        starts = self.knots[:-1]
        nodes = (starts[:, None] + self.h * _GL3_X[None, :]).ravel()
        D = self.design(nodes)
        w = np.tile(_GL3_W * self.h, self.n_knots - 1)
        return (D * w[:, None]).T @ D

    # ------------------------------------------------------------------
    # derivatives (used for curve-level spline targets)
    # ------------------------------------------------------------------
    def derivative_basis(self) -> "SplineBasis":
        if self.degree == 0:
            raise ValueError("degree-0 splines have no useful derivative")
        return SplineBasis(self.degree - 1, self.n_knots, self.periodic)

    def derivative_coefs(self, coef: np.ndarray) -> np.ndarray:
        """Coefficients of the derivative spline in ``derivative_basis()``.

        ``coef`` has shape ``(size, d)``.
        """
        p = self.degree
        coef = np.asarray(coef, dtype=float)
        if self.periodic:
            return (coef - np.roll(coef, 1, axis=0)) / self.h
        tau = np.concatenate([np.zeros(p), self.knots, np.ones(p)])
        m = np.arange(self.size - 1)
        denom = (tau[m + p + 1] - tau[m + 1]) / p
        return (coef[1:] - coef[:-1]) / denom[:, None]


def _cardinal(u: np.ndarray, degree: int) -> np.ndarray:
    """Cardinal B-spline of the given degree evaluated at ``u`` (support ``[0, degree+1]``)."""
    u = np.asarray(u, dtype=float)
    if degree == 0:
        return ((u >= 0.0) & (u < 1.0)).astype(float)
    if degree == 1:
        return np.where((u >= 0.0) & (u < 1.0), u,
                        np.where((u >= 1.0) & (u < 2.0), 2.0 - u, 0.0))
    v = np.zeros_like(u)
    m0 = (u >= 0.0) & (u < 1.0)
    m1 = (u >= 1.0) & (u < 2.0)
    m2 = (u >= 2.0) & (u < 3.0)
    v[m0] = 0.5 * u[m0] ** 2
    v[m1] = 0.5 * (-2.0 * u[m1] ** 2 + 6.0 * u[m1] - 3.0)
    v[m2] = 0.5 * (3.0 - u[m2]) ** 2
    return v


class SplineFunction:
    """Vector-valued spline ``[0, 1] -> R^d`` with coefficients ``(size, d)``."""

    __slots__ = ("basis", "coef")

    def __init__(self, basis: SplineBasis, coef):
        coef = np.asarray(coef, dtype=float)
        if coef.ndim == 1:
            coef = coef[:, None]
        if coef.shape[0] != basis.size:
            raise ValueError(
                f"coefficient rows ({coef.shape[0]}) must match basis size "
                f"({basis.size})"
            )
        self.basis = basis
        self.coef = coef

    @property
    def dim(self) -> int:
        return self.coef.shape[1]

    def __call__(self, t) -> np.ndarray:
        return self.basis.design(t) @ self.coef

    def antiderivative_at(self, t) -> np.ndarray:
        return self.basis.design_antiderivative(t) @ self.coef

    def derivative(self) -> "SplineFunction":
        return SplineFunction(self.basis.derivative_basis(),
                              self.basis.derivative_coefs(self.coef))

    def norm_sq(self) -> float:
        """Exact squared L2 norm."""
        return float(np.einsum("md,mn,nd->", self.coef, self.basis.gram, self.coef))

    def __add__(self, other):
        if not isinstance(other, SplineFunction) or other.basis != self.basis:
            return NotImplemented
        return SplineFunction(self.basis, self.coef + other.coef)

    def __sub__(self, other):
        if not isinstance(other, SplineFunction) or other.basis != self.basis:
            return NotImplemented
        return SplineFunction(self.basis, self.coef - other.coef)

    def __mul__(self, scalar):
        return SplineFunction(self.basis, self.coef * float(scalar))

    __rmul__ = __mul__
