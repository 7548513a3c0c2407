"""Candidate regression procedures and the fit dispatcher."""

from __future__ import annotations

from .forest import ForestConfig, ForestPredictor, fit_forest
from .fourier import FourierConfig, FourierPredictor, fit_fourier, sine_basis, truncation_size
from .kernel import NwConfig, NwPredictor, fit_nw
from .lasso import LassoConfig, LassoPredictor, fit_lasso, lambda_max
from .ols import LinearPredictor, OlsConfig, build_design, fit_ols, lstsq_pivoted
from .spline import AdditiveSplineConfig, AdditiveSplinePredictor, fit_additive_spline

__all__ = [
    "OlsConfig", "FourierConfig", "NwConfig", "LassoConfig", "ForestConfig",
    "AdditiveSplineConfig", "fit_ols", "fit_fourier", "fit_nw", "fit_lasso",
    "fit_forest", "fit_additive_spline", "dispatch_fit", "build_design",
    "lstsq_pivoted", "sine_basis", "truncation_size", "lambda_max",
    "LinearPredictor", "FourierPredictor", "NwPredictor", "LassoPredictor",
    "ForestPredictor", "AdditiveSplinePredictor",
]


def dispatch_fit(config, data, train, rng=None):
    """Route a candidate's config to its estimator; forest consumes the rng."""
    if isinstance(config, OlsConfig):
        return fit_ols(config, data, train)
    if isinstance(config, FourierConfig):
        return fit_fourier(config, data, train)
    if isinstance(config, NwConfig):
        return fit_nw(config, data, train)
    if isinstance(config, LassoConfig):
        return fit_lasso(config, data, train)
    if isinstance(config, ForestConfig):
        return fit_forest(config, data, train, rng)
    if isinstance(config, AdditiveSplineConfig):
        return fit_additive_spline(config, data, train)
    raise TypeError(f"unknown estimator config {type(config).__name__}")
