"""Two-stage local linear estimation of truncated conditional expectation functions.

The estimand is the mean of an outcome below (or above) a conditional quantile,
E[Y | Y <= Q(eta, X), X = x0].  Estimation runs a local linear quantile
regression in the first stage and a local linear regression on an orthogonalized
generated outcome in the second stage, so that first-stage estimation error has
no first-order effect.  The package also provides bias-aware inference,
bandwidth selection, alternative estimators, partial-identification bounds for
sharp regression discontinuity designs with manipulation and for randomized
experiments with sample selection, and a Monte Carlo harness.
"""

from .data import Sample
from .errors import (
    AllBandwidthsFailed,
    BoundaryUnsupported,
    DegenerateBias,
    DegenerateDensity,
    DegenerateSelection,
    EmptyWindow,
    EstimationError,
    MissingColumn,
    NegativeScale,
    ParseError,
    RankDeficient,
    TooLarge,
)
from .estimator import Estimate, EstimatorKind, TruncSpec, estimate, psi
from .inference import BandwidthChoice, CiSpec, bandwidth_amse, bandwidth_worstcase_rmse, build_ci, folded_normal_cv
from .kernels import EPANECHNIKOV, TRIANGULAR, UNIFORM, KernelSpec, Side

__version__ = "0.1.0"

__all__ = [
    "AllBandwidthsFailed",
    "BandwidthChoice",
    "BoundaryUnsupported",
    "CiSpec",
    "DegenerateBias",
    "DegenerateDensity",
    "DegenerateSelection",
    "EPANECHNIKOV",
    "EmptyWindow",
    "Estimate",
    "EstimationError",
    "EstimatorKind",
    "KernelSpec",
    "MissingColumn",
    "NegativeScale",
    "ParseError",
    "RankDeficient",
    "Sample",
    "Side",
    "TooLarge",
    "TRIANGULAR",
    "TruncSpec",
    "UNIFORM",
    "bandwidth_amse",
    "bandwidth_worstcase_rmse",
    "build_ci",
    "estimate",
    "folded_normal_cv",
    "psi",
    "__version__",
]
