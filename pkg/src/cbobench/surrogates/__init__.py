"""Surrogate families: refit-per-iteration GP and fit-free PPD predictors."""

from .dataset import Dataset, standardize
from .distributions import (
    PredictiveDistribution,
    bucket_grid,
    bucketed,
    bucketize_gaussian,
    gaussian,
)
from .external import ExternalPPDSurrogate, external_ppd_surrogate
from .gp import (
    GPConfig,
    GPModel,
    GPPrediction,
    gp_fit,
    gp_fit_fixed,
    gp_predict,
    matern52,
    model_theta,
    reset_fit_counter,
)
from .ppd import (
    TARGETS_ALL,
    TARGETS_OBJECTIVE,
    PPDBatch,
    ReferencePPDSurrogate,
    ppd_predict,
    reference_ppd_surrogate,
)

__all__ = [
    "Dataset",
    "standardize",
    "PredictiveDistribution",
    "bucket_grid",
    "bucketed",
    "bucketize_gaussian",
    "gaussian",
    "ExternalPPDSurrogate",
    "external_ppd_surrogate",
    "GPConfig",
    "GPModel",
    "GPPrediction",
    "gp_fit",
    "gp_fit_fixed",
    "gp_predict",
    "matern52",
    "model_theta",
    "reset_fit_counter",
    "TARGETS_ALL",
    "TARGETS_OBJECTIVE",
    "PPDBatch",
    "ReferencePPDSurrogate",
    "ppd_predict",
    "reference_ppd_surrogate",
]
