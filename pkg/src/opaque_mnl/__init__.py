"""Price and assortment optimization under the multinomial logit model with
a risk-averse opaque product."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .model import (
    ChoiceDistribution,
    InstanceError,
    MarketInstance,
    NumericalDiagnostic,
    optimal_uniform_price,
    substituted_prices,
    trad_choice_prob,
    trad_revenue,
)
from .opaque import (
    ExactCapError,
    McConfig,
    OpaqueQuote,
    opq_choice_prob_exact,
    opq_revenue_exact,
    opq_revenue_mc,
    required_samples,
    sample_choice,
    uniform_price_decomposition,
)
from .pricing import (
    PricingSolution,
    check_case_i_dominance,
    check_price_monotonicity,
    optimize_prices,
    verify_no_opaque_gain,
)
from .assortment import (
    AssortmentSolution,
    RevenueCurve,
    approximation_report,
    brute_force_assortment,
    nested_by_valuation,
    nrv_heuristic,
    optimize_opaque_price,
    revenue_curve,
)
from .experiments import BedConfig, BenchSummary, export, generate_bed, run_bench
