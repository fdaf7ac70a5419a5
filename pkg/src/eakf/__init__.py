"""Ensemble adjustment Kalman filter with exact posterior-covariance consistency.

The package provides the deterministic perturbation update built from a
rank-revealing SVD and a null-space-ordered eigendecomposition, an
independent dense Kalman-filter oracle for certifying the update, and
harness tooling (random-instance verification, the misordering pitfall
demonstration, file-based assimilation, a cycled twin experiment).
"""

from .ensemble import (
    ForecastEnsemble,
    ObservationModel,
    PerturbationMatrix,
    forecast_cov,
    perturbation_matrix,
    reconstruct_members,
)
from .linalg import (
    DEFAULT_RANK_TOL,
    OrderedEigen,
    SvdFactors,
    ordered_eig_psd,
    pinv_rect_diag,
    svd_full,
)
from .oracle import (
    ComparisonReport,
    compare_cov,
    posterior_cov_direct,
    posterior_cov_reduced,
    posterior_cov_woodbury,
)
from .twin import TwinConfig, run_twin
from .update import (
    MODE_CORRECT,
    MODE_MISORDERED,
    AdjustmentMatrix,
    AnalysisResult,
    ObsSpaceProjection,
    adjustment_matrix,
    analyze,
    kalman_gain,
    project_observations,
)
from .verify import VerifyConfig, run_verify

__version__ = "0.1.0"

__all__ = [
    "AdjustmentMatrix",
    "AnalysisResult",
    "ComparisonReport",
    "DEFAULT_RANK_TOL",
    "ForecastEnsemble",
    "MODE_CORRECT",
    "MODE_MISORDERED",
    "ObsSpaceProjection",
    "ObservationModel",
    "OrderedEigen",
    "PerturbationMatrix",
    "SvdFactors",
    "TwinConfig",
    "VerifyConfig",
    "adjustment_matrix",
    "analyze",
    "compare_cov",
    "forecast_cov",
    "kalman_gain",
    "ordered_eig_psd",
    "perturbation_matrix",
    "pinv_rect_diag",
    "posterior_cov_direct",
    "posterior_cov_reduced",
    "posterior_cov_woodbury",
    "project_observations",
    "reconstruct_members",
    "run_twin",
    "run_verify",
    "svd_full",
]
