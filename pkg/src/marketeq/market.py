"""Core linear Fisher market types, objectives, and divergences.

A market has n buyers with budgets B (a point on the unit simplex) and m
divisible goods with per-buyer valuations v in (0, 1].  Buyers place bids
b[i, j] >= 0; prices are column sums of the bid matrix, allocations are
bid shares, and utilities are value-weighted allocation sums.  Everything
here is a pure function of its inputs.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetNotSimplex,
    DimensionMismatch,
    DomainError,
    NonPositiveUtility,
    NonPositiveValue,
    ShapeMismatch,
    SupportViolation,
    ZeroPrice,
)

BUDGET_SUM_TOL = 1e-9


@dataclass(frozen=True)
class MarketInstance:
    """A validated linear Fisher market.

    Attributes
    ----------
    n, m : int
        Number of buyers and goods.
    budgets : ndarray, shape (n,)
        Strictly positive, sums to 1 within ``BUDGET_SUM_TOL``.
    values : ndarray, shape (n, m)
        Valuations, every entry in (0, 1].
    """

    n: int
    m: int
    budgets: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class DerivedState:
    """Prices, allocations, and utilities implied by a bid matrix."""

    prices: np.ndarray       # (m,)  p[j] = sum_i b[i, j]
    allocations: np.ndarray  # (n, m)  x[i, j] = b[i, j] / p[j]
    utilities: np.ndarray    # (n,)  u[i] = sum_j v[i, j] * x[i, j]


@dataclass(frozen=True)
class ObjectiveReport:
    """Both convex-program objective values plus the constant linking them."""

    eg_value: float
    shmyrev_value: float
    budget_entropy_term: float


def validate_market(budgets, values) -> MarketInstance:
    """Validate raw budget/value data and return a market instance.

    Budgets must be strictly positive and sum to 1 within ``BUDGET_SUM_TOL``.
    Values must lie in (0, 1]; callers holding larger values must rescale
    first (see ``harness.gen_market``, which divides by the maximum).
    """
    budgets = np.asarray(budgets, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if budgets.ndim != 1 or values.ndim != 2:
        raise DimensionMismatch(
            f"expected budgets shape (n,) and values shape (n, m), got {budgets.shape} and {values.shape}"
        )
    n = budgets.shape[0]
    m = values.shape[1]
    if n == 0 or m == 0:
        raise DimensionMismatch("market needs at least one buyer and one good")
    if values.shape[0] != n:
        raise DimensionMismatch(f"values has {values.shape[0]} rows for {n} budgets")
    if np.any(budgets <= 0.0):
        raise DomainError("every budget must be strictly positive")
    total = float(budgets.sum())
    if abs(total - 1.0) > BUDGET_SUM_TOL:
        raise BudgetNotSimplex(f"budgets sum to {total!r}, expected 1 within {BUDGET_SUM_TOL}")
    if np.any(values <= 0.0):
        raise NonPositiveValue("every value entry must be strictly positive")
    if np.any(values > 1.0):
        raise DomainError("value entries must not exceed 1; rescale by the maximum first")
    return MarketInstance(n=n, m=m, budgets=budgets.copy(), values=values.copy())


def uniform_init(market: MarketInstance) -> np.ndarray:
    """Initial bids spreading each budget evenly over all goods: b[i, j] = B[i] / m."""
    return np.repeat((market.budgets / market.m)[:, None], market.m, axis=1)


def derive_state(market: MarketInstance, bids: np.ndarray) -> DerivedState:
    """Compute prices (column sums), allocations (bid shares), and utilities."""
    prices = bids.sum(axis=0)
    if np.any(prices <= 0.0):
        raise ZeroPrice("every good needs a positive total bid")
    allocations = bids / prices
    utilities = (market.values * allocations).sum(axis=1)
    return DerivedState(prices=prices, allocations=allocations, utilities=utilities)


def eg_objective(market: MarketInstance, bids: np.ndarray) -> float:
    """Negated Eisenberg-Gale objective: -sum_i B[i] * log(u[i])."""
    state = derive_state(market, bids)
    if np.any(state.utilities <= 0.0):
        raise NonPositiveUtility("all utilities must be positive to take logs")
    return float(-np.sum(market.budgets * np.log(state.utilities)))


def shmyrev_objective(market: MarketInstance, bids: np.ndarray) -> float:
    """Negated Shmyrev objective: sum_ij b[i, j] * log(p[j] / v[i, j]).

    Zero bids contribute zero (the 0 * log(.) limit convention), so the
    function is defined on the boundary of the feasible set.
    """
    prices = bids.sum(axis=0)
    if np.any(prices <= 0.0):
        raise ZeroPrice("every good needs a positive total bid")
    log_ratio = np.log(prices / market.values)
    return float(np.sum(np.where(bids > 0.0, bids * log_ratio, 0.0)))


def kl_divergence(u, w) -> float:
    """Generalized KL divergence sum_k u[k] * log(u[k] / w[k]) with 0 log 0 = 0.

    Accepts arrays of any matching shape; w must be positive wherever u is.
    """
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if u.shape != w.shape:
        raise ShapeMismatch(f"shapes {u.shape} and {w.shape} differ")
    support = u > 0.0
    if np.any(w[support] <= 0.0):
        raise SupportViolation("w must be positive wherever u is positive")
    us = u[support]
    return float(np.sum(us * np.log(us / w[support])))


def budget_entropy(market: MarketInstance) -> float:
    """The constant sum_i B[i] * log(B[i]) tying the two objectives together."""
    return float(np.sum(market.budgets * np.log(market.budgets)))


def objective_report(market: MarketInstance, bids: np.ndarray) -> ObjectiveReport:
    """Evaluate both objectives and the budget entropy term for one bid matrix."""
    return ObjectiveReport(
        eg_value=eg_objective(market, bids),
        shmyrev_value=shmyrev_objective(market, bids),
        budget_entropy_term=budget_entropy(market),
    )
