"""Optimal shrinkage estimation of the global minimum variance portfolio in high dimensions."""

__version__ = "0.1.0"

from .errors import ConfigurationError, DataError, DegenerateError, GMVError  # noqa: E402
from .estimators import (  # noqa: E402
    ShrinkageEstimate,
    TargetPortfolio,
    bona_fide_shrinkage,
    frahm_memmel,
    traditional_estimator,
    traditional_gmv,
)
from .linalg import CovarianceModel, pseudo_inverse, sample_covariance  # noqa: E402

__all__ = [
    "__version__",
    "ConfigurationError",
    "CovarianceModel",
    "DataError",
    "DegenerateError",
    "GMVError",
    "ShrinkageEstimate",
    "TargetPortfolio",
    "bona_fide_shrinkage",
    "frahm_memmel",
    "pseudo_inverse",
    "sample_covariance",
    "traditional_estimator",
    "traditional_gmv",
]
