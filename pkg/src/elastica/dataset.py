"""Input validation helpers and the covariates-plus-curves data bundle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import Curve
from .errors import DimensionMismatchError


def check_covariates(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError("covariates must form an (n, k) array")
    if not np.all(np.isfinite(X)):
        raise ValueError("covariates must be finite")
    return X


def check_curves(curves) -> list[Curve]:
    curves = list(curves)
    if not curves:
        raise ValueError("need at least one curve")
    if not all(isinstance(c, Curve) for c in curves):
        raise TypeError("responses must be Curve objects")
    dim = curves[0].dim
    if any(c.dim != dim for c in curves):
        raise DimensionMismatchError("curves must share one ambient dimension")
    return curves


def check_X_curves(X, curves) -> tuple[np.ndarray, list[Curve]]:
    X = check_covariates(X)
    curves = check_curves(curves)
    if X.shape[0] != len(curves):
        raise ValueError(
            f"{X.shape[0]} covariate rows for {len(curves)} curves")
    return X, curves


@dataclass
class Dataset:
    """Covariate matrix with matching curve responses."""

    X: np.ndarray
    curves: list[Curve]
    covariate_names: list[str] = field(default_factory=list)
    closed: bool = False

    def __post_init__(self):
        self.X, self.curves = check_X_curves(self.X, self.curves)
        if not self.covariate_names:
            self.covariate_names = [f"x{j + 1}" for j in range(self.X.shape[1])]
        if len(self.covariate_names) != self.X.shape[1]:
            raise ValueError("covariate_names must match the number of columns")

    @property
    def n(self) -> int:
        return len(self.curves)

    @property
    def k(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(self.X[indices], [self.curves[i] for i in indices],
                       list(self.covariate_names), self.closed)
