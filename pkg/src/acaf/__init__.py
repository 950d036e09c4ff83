"""Autoregressive conditional accelerated Frechet (AcAF) models.

Maxima-of-maxima series whose scale and two competing tail indices follow
log-autoregressions driven by the previous maximum.
"""
__version__ = "0.1.0"

from .distribution import (
    AFParams,
    af_log_cdf,
    af_log_pdf,
    af_quantile,
    af_sample,
    sample_unit_frechet,
)
from .dynamics import (
    TABLE9_THETA,
    LatentPath,
    LatentState,
    MaximaSeries,
    ModelSpec,
    ParamVector,
    SimulatedPath,
    filter_path,
    init_state,
    simulate,
    stationarity_probe,
    step_state,
)
from .likelihood import ParamTransform, loglik, nll, per_obs_loglik, score_matrix
from .estimation import (
    FitConfig,
    FitError,
    FitResult,
    conditional_var,
    enforce_identifiability,
    fit,
    fit_variant,
    standard_errors,
)
from .ingestion import (
    PricePanel,
    TickSeries,
    cross_sectional_maxima,
    intraday_maxima,
    neg_log_returns,
)
from .factor_lab import (
    FactorLabConfig,
    LimitCase,
    NoiseLaw,
    convergence_experiment,
    limit_cdf,
    norming_constant,
    simulate_factor_maxima,
)
