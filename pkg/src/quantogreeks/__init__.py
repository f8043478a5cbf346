"""Monte Carlo pricing and hedge sensitivities for two-leg energy quanto options."""

from .model import (
    CorrelationMode,
    FuturesSpec,
    MarketModel,
    TuningFunction,
    ValidationReport,
    VolatilityCurve,
    integrated_covariance,
    integrated_variance,
    validate_model,
    weight_cross_moment,
    weight_kernel_moments,
)
from .payoffs import (
    DigitalProduct,
    FourStrikeCollar,
    PayoffSpec,
    PiecewiseLinear,
    ProductCall,
    Separable,
    evaluate,
    kink_lines,
)
from .simulate import (
    SampleDraw,
    SimConfig,
    SimScheme,
    antithetic_pair,
    draw_samples,
    sample_block,
    sample_paths_log_euler,
    sample_terminal,
)
from .weights import (
    WeightVariant,
    WeightedSample,
    greek_of,
    weight_corr_cross_gamma,
    weight_corr_delta_E,
    weight_corr_delta_I,
    weight_for,
    weight_indep_cross_gamma,
    weight_indep_delta_E,
    weight_indep_delta_I,
)
from .estimators import (
    FdConfig,
    GreekEstimate,
    QuadConfig,
    convergence_table,
    fd_greek,
    mc_estimates,
    mc_greek,
    mc_price,
    quad_greek,
    quad_price,
    residual_risk,
)

__version__ = "0.1.0"
