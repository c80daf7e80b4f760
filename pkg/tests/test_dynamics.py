import math

import numpy as np
import pytest

from marketeq import (
    DomainError,
    budget_entropy,
    eg_objective,
    pr_run,
    pr_step,
    reference_optimum,
    shmyrev_objective,
    uniform_init,
    validate_market,
)
from conftest import random_feasible_bids, random_market


def pr_step_oracle(budgets, values, bids):
    """Independent single-update evaluation with explicit loops."""
    n, m = values.shape
    prices = [sum(bids[i][j] for i in range(n)) for j in range(m)]
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        u = sum(values[i][j] * bids[i][j] / prices[j] for j in range(m))
        for j in range(m):
            out[i][j] = budgets[i] * values[i][j] * (bids[i][j] / prices[j]) / u
    return np.array(out)


def test_pr_step_symmetric_single_buyer_fixed_point():
    market = validate_market([1.0], [[1.0, 1.0]])
    bids = np.array([[0.5, 0.5]])
    assert np.allclose(pr_step(market, bids), bids, rtol=1e-15)


def test_pr_step_single_good_keeps_budgets():
    market = validate_market([0.3, 0.7], [[0.9], [0.4]])
    bids = np.array([[0.3], [0.7]])
    assert np.allclose(pr_step(market, bids), bids, rtol=1e-15)


def test_pr_step_two_by_two_hand_value():
    market = validate_market([0.5, 0.5], [[1.0, 0.5], [0.5, 1.0]])
    bids = uniform_init(market)
    stepped = pr_step(market, bids)
    expected = np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
    assert np.allclose(stepped, expected, rtol=1e-12)
    assert np.allclose(stepped, pr_step_oracle(market.budgets, market.values, bids), rtol=1e-12)


def test_pr_step_matches_oracle_on_random_instances():
    for seed in range(4):
        market = random_market(800 + seed, 5, 7)
        bids = random_feasible_bids(900 + seed, market)
        assert np.allclose(
            pr_step(market, bids), pr_step_oracle(market.budgets, market.values, bids), rtol=1e-12
        )


def test_pr_step_preserves_rows_and_positivity():
    market = random_market(17, 8, 6)
    bids = uniform_init(market)
    for _ in range(10):
        bids = pr_step(market, bids)
        assert np.all(bids > 0.0)
        assert np.allclose(bids.sum(axis=1), market.budgets, rtol=1e-9, atol=0.0)


def test_pr_run_single_iteration_trace():
    market = random_market(23, 4, 4)
    trace = pr_run(market, 1)
    assert [p.iteration for p in trace.points] == [0, 1]
    assert trace.points[1].eg_value <= trace.points[0].eg_value
    assert trace.points[0].queries == 0
    assert trace.points[1].queries == 2 * market.n * market.m


def test_pr_run_rejects_nonpositive_iterations():
    with pytest.raises(DomainError):
        pr_run(random_market(1, 2, 2), 0)


def test_pr_run_objectives_nonincreasing():
    market = random_market(29, 10, 12)
    trace = pr_run(market, 25)
    eg = trace.eg_values()
    sh = trace.shmyrev_values()
    assert np.all(eg[1:] <= eg[:-1] + 1e-9 * np.abs(eg[:-1]))
    assert np.all(sh[1:] <= sh[:-1] + 1e-9 * np.abs(sh[:-1]))


def test_pr_run_query_axis():
    market = random_market(31, 3, 5)
    trace = pr_run(market, 7)
    per = 2 * market.n * market.m
    assert [p.queries for p in trace.points] == [t * per for t in range(8)]


def test_sandwich_chain_along_trajectory():
    market = random_market(37, 6, 9)
    entropy = budget_entropy(market)
    bids = uniform_init(market)
    for _ in range(12):
        nxt = pr_step(market, bids)
        mid = eg_objective(market, bids) + entropy
        lo = shmyrev_objective(market, nxt)
        hi = shmyrev_objective(market, bids)
        slack = 1e-9 * max(1.0, abs(lo), abs(mid), abs(hi))
        assert lo <= mid + slack
        assert mid <= hi + slack
        bids = nxt
    # final bids strictly positive along the whole trajectory
    assert np.all(bids > 0.0)


def test_convergence_bound_small_instances():
    for seed in range(3):
        market = random_market(1000 + seed, 64, 64, equal_budgets=True)
        _, phi_star = reference_optimum(market, 1000)
        trace = pr_run(market, 16)
        assert trace.points[15].eg_value - phi_star <= math.log(64) / 16


def test_reference_optimum_single_buyer():
    market = validate_market([1.0], [[1.0, 1.0]])
    bids, phi_star = reference_optimum(market, 50)
    assert phi_star == pytest.approx(-math.log(2), rel=1e-12)
    assert np.allclose(bids.sum(), 1.0, rtol=1e-12)


def test_reference_optimum_two_by_two_against_grid_search():
    market = validate_market([0.5, 0.5], [[1.0, 0.5], [0.5, 1.0]])
    bids, phi_star = reference_optimum(market, 1000)

    # exhaustive search over the 2-parameter feasible set (a = b[0,0], c = b[1,0])
    grid = np.linspace(0.0, 0.5, 801)
    a, c = np.meshgrid(grid, grid, indexing="ij")
    p0 = a + c
    p1 = 1.0 - p0
    ok = (p0 > 0) & (p1 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        u0 = 1.0 * a / p0 + 0.5 * (0.5 - a) / p1
        u1 = 0.5 * c / p0 + 1.0 * (0.5 - c) / p1
        phi = -0.5 * np.log(u0) - 0.5 * np.log(u1)
    phi_min = float(np.nanmin(np.where(ok & (u0 > 0) & (u1 > 0), phi, np.nan)))

    assert phi_star >= phi_min - 1e-9
    assert phi_star - phi_min <= 1e-3
    # bids concentrate on each buyer's preferred diagonal good
    assert bids[0, 0] > 0.45 and bids[1, 1] > 0.45
    assert bids[0, 1] < 0.05 and bids[1, 0] < 0.05


def test_reference_is_best_iterate_seen():
    market = random_market(43, 8, 8)
    _, phi_star = reference_optimum(market, 200)
    trace = pr_run(market, 50)
    assert all(phi_star <= p.eg_value + 1e-12 for p in trace.points)


def test_trace_invariants():
    market = random_market(47, 4, 4)
    trace = pr_run(market, 9)
    iters = [p.iteration for p in trace.points]
    queries = trace.queries()
    assert iters == sorted(iters) and iters[0] == 0 and len(set(iters)) == len(iters)
    assert np.all(np.diff(queries) >= 0)
    assert trace.final_bids is not None and trace.final_bids.shape == (4, 4)
