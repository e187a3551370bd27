"""Order-flow analytics toolkit.

Core pieces: transaction ingestion and return decomposition, long-memory and
tail estimators, hidden-order reconstruction, liquidity predictors with their
impact laws, market-efficiency imbalance diagnostics, and a seeded synthetic
market generator that reproduces the stylized facts of the real flow.
"""

__version__ = "0.1.0"

from .errors import DomainError
from .orderflow import (
    ReturnSeries,
    Transaction,
    TransactionSeries,
    derive_returns,
    parse_transactions,
    write_transactions,
)
from .estimators import (
    AcfEstimate,
    ExponentSet,
    PowerLawFit,
    TailFit,
    acf,
    derive_exponents,
    fit_power_law_decay,
    hill_tail,
    hurst_periodogram,
    white_noise_band,
)
from .hidden_orders import (
    ActiveOrder,
    HiddenOrder,
    HiddenOrderSet,
    activity_at,
    reconstruct,
    signed_size_acf,
    size_samples,
)
from .impact import (
    HiddenOrderImpactCurve,
    ImpactFnFit,
    ImpactFunction,
    empirical_hidden_order_curve,
    fit_impact_function,
    fit_impact_nonzero,
    impact_e1,
    impact_e2,
)
from .liquidity import (
    ArCoefficients,
    LiquidityPredictorState,
    ar_coefficients,
    continuation_probability,
    e1_state,
    e1_traces,
    e2_state,
    e2_traces,
    efficiency_ratio,
    lambda_e1,
    lambda_e2,
    predict_sign,
    predict_sign_e1,
    predict_sign_e2,
    prob_sign,
)
from .imbalance import (
    DecayProfile,
    ImbalanceRatios,
    ImbalanceTable,
    ImpactCurve,
    PhiResponse,
    ResponseCurve,
    conditional_table,
    cumulative_impacts,
    decay_profile,
    imbalance_ratios,
    mean_initial_impact,
    phi_conditioned_response,
    response_curves,
)
from .simulator import (
    OrderFlow,
    SimConfig,
    SimOutput,
    StylizedFactsReport,
    calibrate_noise,
    generate_order_flow,
    load_sim_config,
    simulate,
    simulate_returns,
    stylized_facts_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
