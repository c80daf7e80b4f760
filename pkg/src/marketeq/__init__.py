"""Linear Fisher market equilibrium computation.

Exact proportional response dynamics, faulty dynamics under controlled
multiplicative estimation error, a classical simulation of measurement-based
norm/inner-product estimators driving the faulty dynamics through running
product accumulators, a projected-gradient baseline, and a query-budget
benchmark harness with deterministic seeding throughout.
"""

from .dynamics import RunTrace, TracePoint, pr_run, pr_step, reference_optimum
from .errors import (
    BudgetNotSimplex,
    DimensionMismatch,
    DomainError,
    EmptyTrace,
    IndexOutOfRange,
    IoError,
    LengthMismatch,
    MarketError,
    NonPositiveEstimate,
    NonPositiveUtility,
    NonPositiveValue,
    ShapeMismatch,
    SupportViolation,
    ZeroPrice,
    ZeroVector,
)
from .estimators import (
    EstimatorConfig,
    QaeParams,
    inner_product_estimate,
    l1_norm_estimate,
    median_of_means,
    noisy_scalar,
    qae_distribution,
    qae_sample,
)
from .fpr import (
    FprIterateRecord,
    FprRunResult,
    ProductAccumulator,
    QfprRunResult,
    accumulate,
    fpr_run,
    fpr_step,
    on_the_fly_alloc,
    on_the_fly_bid,
    qfpr_iteration_queries,
    qfpr_run,
    reconstruct_allocations,
    reconstruct_bids,
    select_best_iterate,
)
from .harness import (
    CurvePoint,
    ExperimentConfig,
    cached_reference,
    emit_curves,
    gen_market,
    iterations_for,
    load_curves,
    resolve_qae_params,
    run_experiment,
    summarize_curves,
)
from .io import load_market, market_digest, save_market
from .market import (
    DerivedState,
    MarketInstance,
    ObjectiveReport,
    budget_entropy,
    derive_state,
    eg_objective,
    kl_divergence,
    objective_report,
    shmyrev_objective,
    uniform_init,
    validate_market,
)
from .pgd import PgdConfig, pgd_run, pgd_step, project_simplex, shmyrev_gradient
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "BudgetNotSimplex", "CurvePoint", "DerivedState", "DimensionMismatch", "DomainError",
    "EmptyTrace", "EstimatorConfig", "ExperimentConfig", "FprIterateRecord", "FprRunResult",
    "IndexOutOfRange", "IoError", "LengthMismatch", "MarketError", "MarketInstance",
    "NonPositiveEstimate", "NonPositiveUtility", "NonPositiveValue", "ObjectiveReport",
    "PgdConfig", "ProductAccumulator", "QaeParams", "QfprRunResult", "RngStream", "RunTrace",
    "ShapeMismatch", "SupportViolation", "TracePoint", "ZeroPrice", "ZeroVector",
    "accumulate", "budget_entropy", "cached_reference", "derive_state", "eg_objective",
    "emit_curves", "fpr_run", "fpr_step", "gen_market", "inner_product_estimate",
    "iterations_for", "kl_divergence", "l1_norm_estimate", "load_curves", "load_market",
    "market_digest", "median_of_means", "noisy_scalar", "objective_report", "on_the_fly_alloc",
    "on_the_fly_bid", "pgd_run", "pgd_step", "pr_run", "pr_step", "project_simplex",
    "qae_distribution", "qae_sample", "qfpr_iteration_queries", "qfpr_run",
    "reconstruct_allocations", "reconstruct_bids", "reference_optimum", "resolve_qae_params",
    "run_experiment", "save_market", "select_best_iterate", "shmyrev_gradient",
    "shmyrev_objective", "summarize_curves", "uniform_init", "validate_market",
]
