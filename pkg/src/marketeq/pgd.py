"""Projected gradient descent on the Shmyrev objective.

Each step takes a gradient move r = b - gamma * g with
g[i, j] = 1 + log(p[j] / v[i, j]) and projects every buyer row back onto
its budget simplex with the sort-and-threshold rule.  The price-coupling
term of the exact gradient sums to exactly 1 across a column and is already
absorbed in g.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import RunTrace, TracePoint
from .errors import DomainError, ZeroPrice
from .market import MarketInstance, eg_objective, shmyrev_objective, uniform_init

# Gradient, update, and projection each read every bid entry once per step.
PGD_QUERIES_PER_ENTRY = 3

# Projection can zero out every bid on a good, putting the next gradient at
# log(0).  Blending this much of the uniform spread back in after projecting
# keeps every price positive without measurably moving the iterate.
INTERIOR_BLEND = 1e-14


@dataclass(frozen=True)
class PgdConfig:
    """Iteration count and learning rate; "auto" uses 1000 / (L * n) with L = 1 / min initial price."""

    iterations: int
    learning_rate: float | str = "auto"

    def __post_init__(self):
        if self.iterations < 1:
            raise DomainError("iterations must be at least 1")
        if self.learning_rate != "auto" and not float(self.learning_rate) > 0.0:
            raise DomainError("learning_rate must be positive or 'auto'")


def shmyrev_gradient(market: MarketInstance, bids: np.ndarray) -> np.ndarray:
    """Gradient g[i, j] = 1 + log(p[j] / v[i, j]) of the negated Shmyrev objective."""
    prices = bids.sum(axis=0)
    if np.any(prices <= 0.0):
        raise ZeroPrice("every good needs a positive total bid")
    return 1.0 + np.log(prices / market.values)


def project_simplex(point, budget: float) -> np.ndarray:
    """Euclidean projection of a vector onto {x >= 0 : sum(x) = budget}.

    Sort-and-threshold: with entries sorted descending, the threshold tau is
    the largest partial-mean correction keeping the leading entries positive,
    and the projection is max(point - tau, 0).
    """
    r = np.asarray(point, dtype=np.float64)
    if budget <= 0.0:
        raise DomainError("budget must be positive")
    u = np.sort(r)[::-1]
    corrections = (np.cumsum(u) - budget) / np.arange(1, r.size + 1)
    rho = int(np.nonzero(u - corrections > 0.0)[0].max())
    return np.maximum(r - corrections[rho], 0.0)


def _project_rows(r: np.ndarray, budgets: np.ndarray) -> np.ndarray:
    """Row-wise ``project_simplex`` with each row's own budget."""
    u = -np.sort(-r, axis=1)
    ranks = np.arange(1, r.shape[1] + 1)
    corrections = (np.cumsum(u, axis=1) - budgets[:, None]) / ranks
    # The support condition holds on a prefix of each sorted row.
    rho = (u - corrections > 0.0).sum(axis=1) - 1
    tau = corrections[np.arange(r.shape[0]), rho]
    return np.maximum(r - tau[:, None], 0.0)


def pgd_step(market: MarketInstance, bids: np.ndarray, learning_rate: float) -> np.ndarray:
    """One gradient move followed by row-wise projection onto the budget simplices.

    A vanishing uniform component (``INTERIOR_BLEND``) is folded into the
    projected rows so that no good is left entirely unbid; at aggressive
    fixed rates the projection otherwise collapses columns to zero and the
    following gradient is undefined.  Row sums are unaffected.
    """
    moved = bids - learning_rate * shmyrev_gradient(market, bids)
    projected = _project_rows(moved, market.budgets)
    uniform_rows = market.budgets[:, None] / market.m
    return (1.0 - INTERIOR_BLEND) * projected + INTERIOR_BLEND * uniform_rows


def auto_learning_rate(market: MarketInstance) -> float:
    """Rate 1000 / (L * n) with L fixed from the uniform-start prices."""
    initial_prices = uniform_init(market).sum(axis=0)
    lipschitz = 1.0 / float(initial_prices.min())
    return 1000.0 / (lipschitz * market.n)


def pgd_run(market: MarketInstance, config: PgdConfig, on_point=None) -> RunTrace:
    """Run projected gradient descent from the uniform start.

    The trace has one point per iterate (0..iterations) and charges 3nm
    queries per step.  ``on_point``, when given, receives each TracePoint as
    it is produced.
    """
    rate = auto_learning_rate(market) if config.learning_rate == "auto" else float(config.learning_rate)
    per_iteration = PGD_QUERIES_PER_ENTRY * market.n * market.m
    bids = uniform_init(market)
    points = [TracePoint(0, eg_objective(market, bids), shmyrev_objective(market, bids), 0)]
    if on_point is not None:
        on_point(points[0])
    for t in range(1, config.iterations + 1):
        bids = pgd_step(market, bids, rate)
        point = TracePoint(t, eg_objective(market, bids), shmyrev_objective(market, bids), t * per_iteration)
        points.append(point)
        if on_point is not None:
            on_point(point)
    return RunTrace(points=points, final_bids=bids)
