"""Faulty proportional response dynamics with on-the-fly bid reconstruction.

The faulty update replaces exact prices and utilities with multiplicative
estimates.  Because every update is a product of per-row and per-column
factors, any iterate can be reconstructed from running coordinatewise
products of the estimates:

    b[i, j] at step t = B[i]^(t+1) * v[i, j]^t
                        / (m * prod_{k<t} p_est[j, k] * prod_{k<t} u_est[i, k])

so a run only needs O(n + m) state per iteration.  The running products are
kept in log space: the factors shrink geometrically and their products
underflow 64-bit floats long before the logs lose accuracy.

``fpr_run`` drives the dynamics with synthetic noise bands; ``qfpr_run``
drives them with the simulated measurement estimators, reconstructing bids
and allocations from the accumulators exactly as a query-access
implementation would, and charging bid-entry queries per estimate.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PR_QUERIES_PER_ENTRY, RunTrace, TracePoint
from .errors import DomainError, EmptyTrace, IndexOutOfRange, NonPositiveEstimate
from .estimators import (
    EstimatorConfig,
    QaeParams,
    _qae_draws,
    inner_product_estimate,
    l1_norm_estimate,
    median_of_means,
    noisy_scalar,
)
from .market import MarketInstance, eg_objective, shmyrev_objective, uniform_init
from .rng import RngStream

# Estimates this small are floored to keep the product representation finite.
ESTIMATE_FLOOR = 1e-300
_LOG_ESTIMATE_FLOOR = math.log(ESTIMATE_FLOOR)

ACCOUNTING_MODES = ("classical", "quantum")


@dataclass(frozen=True)
class ProductAccumulator:
    """Running products of price and utility estimates, stored as log sums.

    ``t_price``/``t_utility`` are the last iteration folded into each
    product; -1 denotes the empty product (all ones).  The two indices can
    differ by one mid-iteration, when prices for step t are known but
    utilities are not yet.
    """

    log_price_product: np.ndarray    # (m,)
    log_utility_product: np.ndarray  # (n,)
    t_price: int
    t_utility: int

    @classmethod
    def empty(cls, n: int, m: int) -> "ProductAccumulator":
        return cls(np.zeros(m), np.zeros(n), -1, -1)

    @property
    def price_product(self) -> np.ndarray:
        return np.exp(self.log_price_product)

    @property
    def utility_product(self) -> np.ndarray:
        return np.exp(self.log_utility_product)

    @property
    def t(self) -> int:
        if self.t_price != self.t_utility:
            raise IndexOutOfRange("accumulator is mid-iteration; price and utility stages differ")
        return self.t_utility

    def with_prices(self, price_estimates: np.ndarray) -> "ProductAccumulator":
        if np.any(np.asarray(price_estimates) <= 0.0):
            raise NonPositiveEstimate("price estimates must be positive")
        return self.with_log_prices(np.log(price_estimates))

    def with_utilities(self, utility_estimates: np.ndarray) -> "ProductAccumulator":
        if np.any(np.asarray(utility_estimates) <= 0.0):
            raise NonPositiveEstimate("utility estimates must be positive")
        return self.with_log_utilities(np.log(utility_estimates))

    def with_log_prices(self, log_estimates: np.ndarray) -> "ProductAccumulator":
        """Fold in one iteration of price estimates given directly in log space."""
        if not np.all(np.isfinite(log_estimates)):
            raise NonPositiveEstimate("log price estimates must be finite")
        return ProductAccumulator(
            self.log_price_product + log_estimates,
            self.log_utility_product,
            self.t_price + 1,
            self.t_utility,
        )

    def with_log_utilities(self, log_estimates: np.ndarray) -> "ProductAccumulator":
        """Fold in one iteration of utility estimates given directly in log space."""
        if not np.all(np.isfinite(log_estimates)):
            raise NonPositiveEstimate("log utility estimates must be finite")
        return ProductAccumulator(
            self.log_price_product,
            self.log_utility_product + log_estimates,
            self.t_price,
            self.t_utility + 1,
        )


def accumulate(acc: ProductAccumulator, price_estimates, utility_estimates) -> ProductAccumulator:
    """Fold one iteration's estimates into the running products."""
    if acc.t_price != acc.t_utility:
        raise IndexOutOfRange("accumulate needs a synchronized accumulator")
    return acc.with_prices(np.asarray(price_estimates)).with_utilities(np.asarray(utility_estimates))


def _check_indices(market: MarketInstance, buyer: int, good: int, t: int):
    if not 0 <= buyer < market.n:
        raise IndexOutOfRange(f"buyer {buyer} outside [0, {market.n})")
    if not 0 <= good < market.m:
        raise IndexOutOfRange(f"good {good} outside [0, {market.m})")
    if t < 0:
        raise IndexOutOfRange("iteration must be nonnegative")


def on_the_fly_bid(market: MarketInstance, buyer: int, good: int, t: int, acc: ProductAccumulator) -> float:
    """Closed-form bid of iterate ``t`` from products of the first ``t`` estimates."""
    _check_indices(market, buyer, good, t)
    if acc.t_price != t - 1 or acc.t_utility != t - 1:
        raise IndexOutOfRange(f"need products through iteration {t - 1} for bids at {t}")
    log_bid = (
        (t + 1) * math.log(market.budgets[buyer])
        + t * math.log(market.values[buyer, good])
        - math.log(market.m)
        - acc.log_price_product[good]
        - acc.log_utility_product[buyer]
    )
    return math.exp(log_bid)


def on_the_fly_alloc(market: MarketInstance, buyer: int, good: int, t: int, acc: ProductAccumulator) -> float:
    """Closed-form allocation of iterate ``t``; price product runs one step further than utilities."""
    _check_indices(market, buyer, good, t)
    if acc.t_price != t or acc.t_utility != t - 1:
        raise IndexOutOfRange(f"need prices through {t} and utilities through {t - 1} for allocations at {t}")
    log_alloc = (
        (t + 1) * math.log(market.budgets[buyer])
        + t * math.log(market.values[buyer, good])
        - math.log(market.m)
        - acc.log_price_product[good]
        - acc.log_utility_product[buyer]
    )
    return math.exp(log_alloc)


def reconstruct_bids(market: MarketInstance, t: int, acc: ProductAccumulator) -> np.ndarray:
    """Vectorized ``on_the_fly_bid`` over the whole matrix."""
    if t < 0 or acc.t_price != t - 1 or acc.t_utility != t - 1:
        raise IndexOutOfRange(f"need products through iteration {t - 1} for bids at {t}")
    return _reconstruct(market, t, acc)


def reconstruct_allocations(market: MarketInstance, t: int, acc: ProductAccumulator) -> np.ndarray:
    """Vectorized ``on_the_fly_alloc`` over the whole matrix."""
    if t < 0 or acc.t_price != t or acc.t_utility != t - 1:
        raise IndexOutOfRange(f"need prices through {t} and utilities through {t - 1} for allocations at {t}")
    return _reconstruct(market, t, acc)


def _reconstruct(market: MarketInstance, t: int, acc: ProductAccumulator) -> np.ndarray:
    log_rows = (t + 1) * np.log(market.budgets) - acc.log_utility_product - math.log(market.m)
    log_matrix = t * np.log(market.values) + log_rows[:, None] - acc.log_price_product[None, :]
    return np.exp(log_matrix)


@dataclass(frozen=True)
class FprIterateRecord:
    """Estimates produced while stepping away from iterate ``iteration``.

    eg_estimate is the objective value implied by the utility estimates,
    -sum_i B[i] * log(u_est[i]); eg_value is the true objective of the
    iterate, kept for instrumentation and excluded from query accounting.
    """

    iteration: int
    price_estimates: np.ndarray
    utility_estimates: np.ndarray
    eg_estimate: float
    eg_value: float
    queries: int


@dataclass
class FprRunResult:
    best_iteration: int
    best_bids: np.ndarray
    trace: RunTrace
    records: list[FprIterateRecord] = field(default_factory=list)
    floored_estimates: int = 0


@dataclass
class QfprRunResult:
    best_iteration: int
    best_accumulator: ProductAccumulator  # products through best_iteration - 1
    trace: RunTrace
    records: list[FprIterateRecord] = field(default_factory=list)
    floored_estimates: int = 0


def select_best_iterate(records: list[FprIterateRecord]) -> int:
    """Index of the record maximizing sum_i B[i] * log(u_est[i]); ties go to the earliest."""
    if not records:
        raise EmptyTrace("no iterate records to select from")
    best_index = records[0].iteration
    best_score = -records[0].eg_estimate
    for record in records[1:]:
        score = -record.eg_estimate
        if score > best_score:
            best_score = score
            best_index = record.iteration
    return best_index


def fpr_step(market: MarketInstance, bids: np.ndarray, price_estimates: np.ndarray, utility_supplier):
    """One faulty update given price estimates and a utility-estimate supplier.

    Allocations use the estimated prices, the implied utilities
    u_hat[i] = sum_j v[i, j] * b[i, j] / p_est[j] are passed to
    ``utility_supplier(u_hat, allocations)``, and the returned estimates
    normalize the next bids.  Returns (next_bids, utility_estimates).  Row
    sums of the output land in [B[i]/(1+eps), B[i]/(1-eps)] when the
    supplier respects a relative band eps.
    """
    price_estimates = np.asarray(price_estimates, dtype=np.float64)
    if np.any(price_estimates <= 0.0):
        raise NonPositiveEstimate("price estimates must be positive")
    allocations = bids / price_estimates
    utilities = (market.values * allocations).sum(axis=1)
    utility_estimates = np.asarray(utility_supplier(utilities, allocations), dtype=np.float64)
    if np.any(utility_estimates <= 0.0):
        raise NonPositiveEstimate("utility estimates must be positive")
    next_bids = market.budgets[:, None] * market.values * allocations / utility_estimates[:, None]
    return next_bids, utility_estimates


def _synthetic_prices(prices, config: EstimatorConfig, streams: RngStream, t: int) -> np.ndarray:
    if config.mode == "exact":
        return prices
    if config.mode == "adversarial_high":
        return prices * (1.0 + config.eps_p)
    if config.mode == "adversarial_low":
        return prices * (1.0 - config.eps_p)
    return np.array(
        [noisy_scalar(prices[j], config.eps_p, config.mode, streams.generator(t, j, "price"))
         for j in range(prices.size)]
    )


def _synthetic_utility_supplier(config: EstimatorConfig, streams: RngStream, t: int):
    def supplier(utilities, allocations):
        if config.mode == "exact":
            return utilities
        if config.mode == "adversarial_high":
            return utilities * (1.0 + config.eps_nu)
        if config.mode == "adversarial_low":
            return utilities * (1.0 - config.eps_nu)
        return np.array(
            [noisy_scalar(utilities[i], config.eps_nu, config.mode, streams.generator(t, i, "utility"))
             for i in range(utilities.size)]
        )

    return supplier


def _qae_prices(bids, params: QaeParams, streams: RngStream, t: int):
    m = bids.shape[1]
    estimates = np.empty(m)
    floored = 0
    for j in range(m):
        column = bids[:, j]
        value = l1_norm_estimate(column, float(column.max()), params, streams.generator(t, j, "price"))
        if value < ESTIMATE_FLOOR:
            value = ESTIMATE_FLOOR
            floored += 1
        estimates[j] = value
    return estimates, floored


def _qae_utilities(allocations, values, params: QaeParams, streams: RngStream, t: int):
    n = allocations.shape[0]
    estimates = np.empty(n)
    floored = 0
    for i in range(n):
        value = inner_product_estimate(allocations[i], values[i], params, streams.generator(t, i, "utility"))
        if value < ESTIMATE_FLOOR:
            value = ESTIMATE_FLOOR
            floored += 1
        estimates[i] = value
    return estimates, floored


def max_scan_queries(length: int, accounting: str = "classical") -> int:
    """Queries charged for one exact maximum scan over ``length`` entries."""
    if accounting == "classical":
        return length
    if accounting == "quantum":
        root = math.isqrt(length)
        return root if root * root == length else root + 1
    raise DomainError(f"accounting must be one of {ACCOUNTING_MODES}, got {accounting!r}")


def estimate_queries(params: QaeParams) -> int:
    """Bid queries for one boosted estimate: 2 * depth per measurement, all repetitions."""
    return 2 * params.depth * params.samples


def qfpr_iteration_queries(n: int, m: int, params: QaeParams, accounting: str = "quantum") -> int:
    """Per-iteration query cost: m column-norm and n inner-product estimates plus max scans."""
    per_estimate = estimate_queries(params)
    return (
        m * (per_estimate + max_scan_queries(n, accounting))
        + n * (per_estimate + max_scan_queries(m, accounting))
    )


def fpr_run(market: MarketInstance, iterations: int, config: EstimatorConfig, seed: int) -> FprRunResult:
    """Run the faulty dynamics for ``iterations`` updates under a noise config.

    Estimation rounds t = 0..iterations-1 perturb each price and utility
    coordinate independently per the configured mode.  The run keeps the
    running estimate products, selects the iterate with the best estimated
    objective, and reconstructs its bids from the product snapshot taken
    before that round.  The trace logs true objective values for iterates
    0..iterations and charges 2nm queries per update (mode "qae" instead
    charges the measurement-estimator cost).
    """
    if iterations < 1:
        raise DomainError("iterations must be at least 1")
    streams = RngStream(seed)
    qae_mode = config.mode == "qae"
    per_iteration = (
        qfpr_iteration_queries(market.n, market.m, config.qae, "classical")
        if qae_mode
        else PR_QUERIES_PER_ENTRY * market.n * market.m
    )

    bids = uniform_init(market)
    acc = ProductAccumulator.empty(market.n, market.m)
    points = [TracePoint(0, eg_objective(market, bids), shmyrev_objective(market, bids), 0)]
    records: list[FprIterateRecord] = []
    floored_total = 0
    best_score = -math.inf
    best_iteration = 0
    best_acc = acc

    for t in range(iterations):
        acc_before = acc
        if qae_mode:
            price_estimates, floored_p = _qae_prices(bids, config.qae, streams, t)
            floored_box = [floored_p]

            def supplier(utilities, allocations, _t=t, _box=floored_box):
                estimates, floored_u = _qae_utilities(allocations, market.values, config.qae, streams, _t)
                _box[0] += floored_u
                return estimates

            next_bids, utility_estimates = fpr_step(market, bids, price_estimates, supplier)
            floored_total += floored_box[0]
        else:
            price_estimates = _synthetic_prices(bids.sum(axis=0), config, streams, t)
            next_bids, utility_estimates = fpr_step(
                market, bids, price_estimates, _synthetic_utility_supplier(config, streams, t)
            )
        acc = accumulate(acc_before, price_estimates, utility_estimates)

        queries = (t + 1) * per_iteration
        eg_estimate = float(-np.sum(market.budgets * np.log(utility_estimates)))
        records.append(
            FprIterateRecord(t, price_estimates, utility_estimates, eg_estimate, points[-1].eg_value, queries)
        )
        score = -eg_estimate
        if score > best_score:
            best_score = score
            best_iteration = t
            best_acc = acc_before

        bids = next_bids
        points.append(TracePoint(t + 1, eg_objective(market, bids), shmyrev_objective(market, bids), queries))

    best_bids = reconstruct_bids(market, best_iteration, best_acc)
    trace = RunTrace(points=points, final_bids=bids)
    return FprRunResult(best_iteration, best_bids, trace, records, floored_total)


def _log_axis_stats(log_matrix: np.ndarray, axis: int):
    """Per-row or per-column (log of max, log of sum) computed stably in log space."""
    log_max = log_matrix.max(axis=axis)
    log_sum = log_max + np.log(
        np.exp(log_matrix - np.expand_dims(log_max, axis)).sum(axis=axis)
    )
    return log_max, log_sum


def _log_norm_estimates(log_matrix: np.ndarray, axis: int, count: int, params: QaeParams,
                        streams: RngStream, t: int, role: str):
    """Simulated-measurement norm estimates of matrix slices, all in log space.

    Each slice's mean amplitude is formed from its exact log-space sum and
    maximum, one boosted measurement estimate is drawn per slice, and the
    result is returned as log(estimate * length * max).  Estimates of zero
    amplitude are floored and counted.
    """
    log_max, log_sum = _log_axis_stats(log_matrix, axis)
    length = log_matrix.shape[axis]
    log_amplitude = np.minimum(log_sum - math.log(length) - log_max, 0.0)
    log_estimates = np.empty(count)
    floored = 0
    for k in range(count):
        gen = streams.generator(t, k, role)
        draws = _qae_draws(math.exp(log_amplitude[k]), params.depth, params.samples, gen)
        boosted = median_of_means(draws, params.groups, params.group_size)
        log_scaled = math.log(boosted) + math.log(length) + log_max[k] if boosted > 0.0 else -math.inf
        if log_scaled < _LOG_ESTIMATE_FLOOR:
            log_scaled = _LOG_ESTIMATE_FLOOR
            floored += 1
        log_estimates[k] = log_scaled
    return log_estimates, floored


def _stable_objectives(market: MarketInstance, log_bids: np.ndarray):
    """EG and Shmyrev values of exp(log_bids), tolerating extreme scales.

    Allocations are formed as within-column shares, so the EG value stays
    finite however wild the overall scale is; the Shmyrev value needs the
    absolute price scale and is allowed to overflow to +/-inf on runaway
    iterates.
    """
    log_max, log_prices = _log_axis_stats(log_bids, axis=0)
    shares = np.exp(log_bids - log_prices[None, :])
    utilities = (market.values * shares).sum(axis=1)
    # a buyer crowded out beyond float range has utility 0 here; the iterate's
    # value is then +inf, which best-iterate selection never picks
    with np.errstate(divide="ignore"):
        eg_value = float(-np.sum(market.budgets * np.log(utilities)))
    with np.errstate(over="ignore"):
        price_mass = np.exp(log_prices)
        column_terms = (shares * (log_prices[None, :] - np.log(market.values))).sum(axis=0)
        shmyrev_value = float(np.sum(price_mass * column_terms))
    return eg_value, shmyrev_value


def qfpr_run(
    market: MarketInstance,
    iterations: int,
    params: QaeParams,
    seed: int,
    accounting: str = "quantum",
) -> QfprRunResult:
    """Classically simulate the query-access faulty dynamics.

    Bids are never stored: each round reconstructs iterate t from the
    running products, estimates the m column norms and the n
    allocation/value inner products through the simulated measurement
    estimators, and folds the estimates back into the products.  The whole
    round runs in log space, because desk-scale runs concentrate bids far
    beyond 64-bit float range even though every derived quantity stays
    well-scaled.  Estimates below ``ESTIMATE_FLOOR`` are floored and
    counted.  Queries per round are ``qfpr_iteration_queries``; objective
    values in the trace are instrumentation only and charge nothing.
    """
    if iterations < 1:
        raise DomainError("iterations must be at least 1")
    streams = RngStream(seed)
    per_iteration = qfpr_iteration_queries(market.n, market.m, params, accounting)
    log_budgets = np.log(market.budgets)
    log_values = np.log(market.values)
    log_m = math.log(market.m)

    def log_bids_at(t: int, acc: ProductAccumulator) -> np.ndarray:
        rows = (t + 1) * log_budgets - acc.log_utility_product - log_m
        return t * log_values + rows[:, None] - acc.log_price_product[None, :]

    acc = ProductAccumulator.empty(market.n, market.m)
    log_bids = log_bids_at(0, acc)
    eg_value, shmyrev_value = _stable_objectives(market, log_bids)
    points = [TracePoint(0, eg_value, shmyrev_value, 0)]
    records: list[FprIterateRecord] = []
    floored_total = 0
    best_score = -math.inf
    best_iteration = 0
    best_acc = acc

    for t in range(iterations):
        acc_before = acc
        log_price_est, floored_p = _log_norm_estimates(
            log_bids, 0, market.m, params, streams, t, "price"
        )
        acc_mid = acc_before.with_log_prices(log_price_est)
        log_allocs = log_bids - log_price_est[None, :]
        log_util_est, floored_u = _log_norm_estimates(
            log_allocs + log_values, 1, market.n, params, streams, t, "utility"
        )
        acc = acc_mid.with_log_utilities(log_util_est)
        floored_total += floored_p + floored_u

        queries = (t + 1) * per_iteration
        eg_estimate = float(-np.sum(market.budgets * log_util_est))
        with np.errstate(over="ignore", under="ignore"):
            records.append(
                FprIterateRecord(t, np.exp(log_price_est), np.exp(log_util_est),
                                 eg_estimate, points[-1].eg_value, queries)
            )
        score = -eg_estimate
        if score > best_score:
            best_score = score
            best_iteration = t
            best_acc = acc_before

        log_bids = log_bids_at(t + 1, acc)
        eg_value, shmyrev_value = _stable_objectives(market, log_bids)
        points.append(TracePoint(t + 1, eg_value, shmyrev_value, queries))

    with np.errstate(over="ignore", under="ignore"):
        final_bids = np.exp(log_bids)
    trace = RunTrace(points=points, final_bids=final_bids)
    return QfprRunResult(best_iteration, best_acc, trace, records, floored_total)
