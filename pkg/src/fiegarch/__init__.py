"""Long-memory (FIEGARCH) volatility modelling and portfolio risk measures.

The package covers the full chain: fractional-differencing filters, model
simulation in both equivalent parameterizations, volatility filtering and
forecasting, ARMA conditional means, quasi-maximum-likelihood estimation,
the VaR / Expected Shortfall / MaxLoss risk measures under empirical,
Gaussian, EWMA and econometric approaches, and a seeded replication harness
for estimator comparison.
"""

__version__ = "0.1.0"

from .arma import ArmaSpec, arma_filter, arma_forecast, arma_synthesize
from .errors import (
    ConvergenceWarning,
    DegeneratePortfolioError,
    DomainError,
    EstimationError,
    FiegarchError,
    HorizonScalingWarning,
    NonInvertibleError,
    PanelError,
    SingularSeriesError,
)
from .estimation import (
    FitResult,
    JointSpec,
    OptimizerConfig,
    fit,
    ljung_box,
    model_select,
    qmle_loglik,
    standardized_residuals,
)
from .fracdiff import (
    CoefficientSeries,
    frac_diff_coeffs,
    lambda_coeffs,
    series_invert,
    series_mul,
)
from .model import (
    FiegarchSpec,
    SimulatedPath,
    VolatilityState,
    ZivotWangSpec,
    filter_volatility,
    filter_volatility_zw,
    forecast_volatility,
    from_zivot_wang,
    g_transform,
    simulate,
    simulate_zw,
    to_zivot_wang,
)
from .montecarlo import (
    ExperimentPlan,
    ExperimentReport,
    ForecastReport,
    forecast_experiment,
    mse,
    run_experiment,
    table41_models,
)
from .risk import (
    EwmaState,
    PortfolioSpec,
    RiskEstimate,
    es_econometric,
    es_empirical,
    es_normal,
    es_riskmetrics,
    ewma_update,
    maxloss,
    portfolio_loss,
    portfolio_value_series,
    var_econometric,
    var_empirical,
    var_normal,
    var_riskmetrics,
)
