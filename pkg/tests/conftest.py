import numpy as np
import pytest

from marketeq import MarketInstance, validate_market


@pytest.fixture
def tiny_market():
    return validate_market([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]])


def random_market(seed: int, n: int, m: int, equal_budgets: bool = False) -> MarketInstance:
    """Direct random instance, independent of the harness sampler."""
    rng = np.random.default_rng(seed)
    values = 1.0 - rng.random((n, m))
    if equal_budgets:
        budgets = np.full(n, 1.0 / n)
    else:
        raw = 0.1 + rng.random(n)
        budgets = raw / raw.sum()
    return validate_market(budgets, values)


def random_feasible_bids(seed: int, market: MarketInstance) -> np.ndarray:
    """Strictly positive bids with row i summing to the buyer's budget."""
    rng = np.random.default_rng(seed)
    raw = 0.05 + rng.random((market.n, market.m))
    return raw / raw.sum(axis=1, keepdims=True) * market.budgets[:, None]
