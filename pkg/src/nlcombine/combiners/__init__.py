"""Linear combination baselines and the weighted nonlinear ensemble."""

from .forecast_set import ForecastSet
from .linear import (
    LinearCombinerSpec,
    combine_pointwise,
    error_based,
    error_based_weights,
    fit_linear_combiner,
    median,
    simple_average,
    trimmed,
    variance_based,
    variance_based_weights,
    winsorized,
)
from .nonlinear import (
    DesignMatrices,
    NonlinearEnsembleWeights,
    build_design_matrices,
    fit_nonlinear_ensemble,
    model_pairs,
    predict_nonlinear,
    sse_gradient,
    standardization_stats,
)

__all__ = [
    "DesignMatrices", "ForecastSet", "LinearCombinerSpec", "NonlinearEnsembleWeights",
    "build_design_matrices", "combine_pointwise", "error_based", "error_based_weights",
    "fit_linear_combiner", "fit_nonlinear_ensemble", "median", "model_pairs",
    "predict_nonlinear", "simple_average", "sse_gradient", "standardization_stats",
    "trimmed", "variance_based", "variance_based_weights", "winsorized",
]
