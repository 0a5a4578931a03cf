"""Elastic regression for curves modulo re-parametrization.

Curves are compared with the elastic distance of the square-root-velocity
framework, which quotients out translation and re-parametrization.  The
package provides the quotient linear regression estimator together with
pre-alignment and Fréchet-regression baselines, resampling-based
inference, simulation scenarios and a command-line interface.
"""

from .alignment import (AlignConfig, AlignmentResult, align_to_target,
                        brute_force_distance, elastic_distance)
from .basis import SplineBasis, SplineFunction
from .curves import Curve, Warping, apply_warping, polygon_from_points
from .srv import (PiecewiseConstantSrv, close_prediction, srv_inverse,
                  srv_transform)

__all__ = [
    "AlignConfig",
    "AlignmentResult",
    "Curve",
    "PiecewiseConstantSrv",
    "SplineBasis",
    "SplineFunction",
    "Warping",
    "align_to_target",
    "apply_warping",
    "brute_force_distance",
    "close_prediction",
    "elastic_distance",
    "polygon_from_points",
    "srv_inverse",
    "srv_transform",
]

__version__ = "0.1.0"
