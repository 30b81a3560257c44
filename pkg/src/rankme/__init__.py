"""Rank-based (R-) estimation of regression slopes under measurement errors.

The R-estimator minimizes Jaeckel's rank dispersion of residuals. When the
regressors are observed with additive error it is biased toward zero by the
attenuation matrix (Q+V)^{-1} Q, whatever the score function or the model
error law. This package computes the estimator, the asymptotic bias and
variance, and Monte Carlo comparisons with least squares and L1 fits.
"""

from ._backend import BACKEND
from .asymptotics import asymptotic_bias, attenuation, gamma_m, theoretical_column
from .distributions import Distribution, MvNormal, parse_law
from .estimators import EstimateResult, l1_estimate, ls_estimate, r_estimate, r_intercept
from .rankcore import Sample, jaeckel_dispersion, linear_rank_statistic, residual_ranks
from .scores import MEDIAN, VAN_DER_WAERDEN, WILCOXON, ScoreFunction, approximate_scores, expected_scores
from .simulation import ModelSpec, run_experiment
from .tables import reproduce_table

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Distribution",
    "MvNormal",
    "parse_law",
    "EstimateResult",
    "l1_estimate",
    "ls_estimate",
    "r_estimate",
    "r_intercept",
    "Sample",
    "jaeckel_dispersion",
    "linear_rank_statistic",
    "residual_ranks",
    "ScoreFunction",
    "WILCOXON",
    "VAN_DER_WAERDEN",
    "MEDIAN",
    "approximate_scores",
    "expected_scores",
    "asymptotic_bias",
    "attenuation",
    "gamma_m",
    "theoretical_column",
    "ModelSpec",
    "run_experiment",
    "reproduce_table",
]
