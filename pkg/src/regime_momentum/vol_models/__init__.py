"""Innovation laws and volatility filters."""

from .figarch import (
    ArfimaFigarch,
    ArfimaFigarchParams,
    FigarchFitResult,
    arfima_figarch_filter,
    arfima_figarch_fit,
    arfima_figarch_loglik,
    arfima_figarch_simulate,
    arfima_residuals,
    figarch_variance_filter,
    figarch_weights,
    fractional_diff_weights,
)
from .garch import (
    ArmaGarchParams,
    arma_garch_filter,
    arma_garch_fit,
    arma_garch_simulate,
    gaussian_loglik,
)
from .gjr import GjrStateParams, gjr_state_step
from .nig import NigParams, NigQuantile, nig_fit_moments, nig_sample

__all__ = [
    "ArfimaFigarch",
    "ArfimaFigarchParams",
    "ArmaGarchParams",
    "FigarchFitResult",
    "GjrStateParams",
    "NigParams",
    "NigQuantile",
    "arfima_figarch_filter",
    "arfima_figarch_fit",
    "arfima_figarch_loglik",
    "arfima_figarch_simulate",
    "arfima_residuals",
    "arma_garch_filter",
    "arma_garch_fit",
    "arma_garch_simulate",
    "figarch_variance_filter",
    "figarch_weights",
    "fractional_diff_weights",
    "gaussian_loglik",
    "gjr_state_step",
    "nig_fit_moments",
    "nig_sample",
]
