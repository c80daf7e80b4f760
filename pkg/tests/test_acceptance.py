"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report.  The expensive fixtures (the 256x256 trajectory family and the
1024x1024 budget-matched benchmark) are computed once per module.
"""

import math

import numpy as np
import pytest

from marketeq import (
    EstimatorConfig,
    ExperimentConfig,
    budget_entropy,
    emit_curves,
    fpr_run,
    fpr_step,
    gen_market,
    kl_divergence,
    pr_run,
    project_simplex,
    qae_distribution,
    QaeParams,
    RngStream,
    inner_product_estimate,
    l1_norm_estimate,
    accumulate,
    ProductAccumulator,
    on_the_fly_bid,
    reconstruct_bids,
    reference_optimum,
    run_experiment,
    select_best_iterate,
    shmyrev_objective,
    summarize_curves,
    uniform_init,
)


def report(number: int, ok: bool, detail: str):
    print(f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {detail}")
    assert ok, f"criterion {number}: {detail}"


# ------------------------------------------------------------ shared fixtures

@pytest.fixture(scope="module")
def pr_family():
    """Ten seeded 256x256 uniform-value, equal-budget runs with references."""
    out = []
    for seed in range(10):
        market = gen_market(256, 256, "uniform", "ceei_equal", seed)
        reference_bids, phi_star = reference_optimum(market, 1000)
        trace = pr_run(market, 16)
        out.append((market, reference_bids, phi_star, trace))
    return out


@pytest.fixture(scope="module")
def fpr_family():
    """Adversarial 64x64 runs at the guarantee-scale error bands, 20 seeds."""
    iterations = 16
    eps_p = math.log(64) / (6 * iterations)
    eps_nu = math.log(64) / (8 * iterations)
    runs = []
    for seed in range(20):
        market = gen_market(64, 64, "uniform", "sampled", seed)
        _, phi_star = reference_optimum(market, 1000)
        for mode in ("adversarial_high", "adversarial_low"):
            config = EstimatorConfig(mode=mode, eps_p=eps_p, eps_nu=eps_nu)
            runs.append((market, phi_star, fpr_run(market, iterations, config, seed), mode))
    return {"runs": runs, "eps_p": eps_p, "eps_nu": eps_nu, "iterations": iterations}


@pytest.fixture(scope="module")
def benchmark():
    """Budget-matched 1024x1024 comparison over 15 seeds (criterion 13)."""
    n = m = 1024
    config = ExperimentConfig(
        n=n, m=m,
        distribution="uniform",
        budget_mode="ceei_equal",
        algorithms=("pr", "qfpr", "pgd"),
        seeds=tuple(range(15)),
        query_budget=16 * 2 * n * m,
        reference_iterations=1000,
    )
    points = run_experiment(config)
    return config, points, summarize_curves(points)


def replay_iterates(market, records):
    bids = uniform_init(market)
    iterates = [bids]
    for record in records:
        bids, _ = fpr_step(market, bids, record.price_estimates,
                           lambda u, x, r=record: r.utility_estimates)
        iterates.append(bids)
    return iterates


# ------------------------------------------------------------ criteria 1-5

def test_c01_pr_convergence_bound(pr_family):
    bound = math.log(256) / 16
    worst = max(trace.points[15].eg_value - phi_star for _, _, phi_star, trace in pr_family)
    report(1, worst <= bound, f"max gap at iterate 15 over 10 seeds {worst:.5f} <= {bound:.5f}")


def test_c02_pr_monotonicity(pr_family):
    ok = True
    worst = 0.0
    for _, _, _, trace in pr_family:
        eg = trace.eg_values()
        sh = trace.shmyrev_values()
        for seq in (eg, sh):
            slack = seq[1:] - (seq[:-1] + 1e-9 * np.abs(seq[:-1]))
            worst = max(worst, float(slack.max()))
            ok &= bool(np.all(slack <= 0.0))
    report(2, ok, f"both objectives nonincreasing, worst violation {worst:.2e}")


def test_c03_sandwich_chain(pr_family):
    ok = True
    for market, _, _, trace in pr_family:
        entropy = budget_entropy(market)
        for before, after in zip(trace.points, trace.points[1:]):
            mid = before.eg_value + entropy
            tol = 1e-9 * max(1.0, abs(after.shmyrev_value), abs(mid), abs(before.shmyrev_value))
            ok &= after.shmyrev_value <= mid + tol
            ok &= mid <= before.shmyrev_value + tol
    report(3, ok, "next shmyrev <= eg + budget entropy <= current shmyrev at every step")


def test_c04_optimality_identity(pr_family):
    worst = 0.0
    for market, reference_bids, phi_star, _ in pr_family:
        residual = abs(
            phi_star - (shmyrev_objective(market, reference_bids) - budget_entropy(market))
        )
        worst = max(worst, residual)
    report(4, worst <= 1e-3, f"max |eg - (shmyrev - entropy)| at reference {worst:.2e} <= 1e-3")


def test_c05_kl_initialization_bound(pr_family):
    worst = 0.0
    ok = True
    for market, reference_bids, _, _ in pr_family:
        div = kl_divergence(reference_bids, uniform_init(market))
        worst = max(worst, div)
        ok &= div <= math.log(market.m)
    report(5, ok, f"max divergence from uniform start {worst:.4f} <= log m = {math.log(256):.4f}")


# ------------------------------------------------------------ criteria 6-8

def test_c06_fpr_convergence(fpr_family):
    iterations = fpr_family["iterations"]
    bound = 2 * math.log(64) / iterations
    worst = -math.inf
    for _, phi_star, result, _ in fpr_family["runs"]:
        gaps = [p.eg_value - phi_star for p in result.trace.points[:iterations]]
        worst = max(worst, min(gaps))
    report(6, worst <= bound, f"worst min-iterate gap over 40 runs {worst:.5f} <= {bound:.5f}")


def test_c07_estimator_selected_iterate(fpr_family):
    iterations = fpr_family["iterations"]
    bound = 2 * math.log(64) / iterations
    worst = -math.inf
    ok = True
    for _, phi_star, result, _ in fpr_family["runs"]:
        t_star = select_best_iterate(result.records)
        ok &= t_star == result.best_iteration
        gap = result.trace.points[t_star].eg_value - phi_star
        worst = max(worst, gap)
    report(7, ok and worst <= bound, f"worst selected-iterate gap {worst:.5f} <= {bound:.5f}")


def test_c08_total_mass_band(fpr_family):
    eps_nu = fpr_family["eps_nu"]
    lo, hi = 1 / (1 + eps_nu) - 1e-10, 1 / (1 - eps_nu) + 1e-10
    ok = True
    for market, _, result, _ in fpr_family["runs"]:
        masses = [float(b.sum()) for b in replay_iterates(market, result.records)]
        ok &= all(lo <= mass <= hi for mass in masses)
    report(8, ok, f"every iterate's bid mass within [{lo:.6f}, {hi:.6f}]")


# ------------------------------------------------------------ criterion 9

def test_c09_qae_distribution_fidelity():
    gen = RngStream(90).generator(0, 0, "price")
    ok = True
    worst_freq = 1.0
    for depth in (8, 32, 128):
        for tenth in range(1, 10):
            a = tenth / 10
            dist = qae_distribution(a, depth)
            ok &= abs(dist.sum() - 1.0) <= 1e-12
            grid = np.sin(np.pi * np.arange(depth) / depth) ** 2
            z = np.searchsorted(np.cumsum(dist), gen.random(100_000), side="right")
            estimates = grid[np.minimum(z, depth - 1)]
            band = 2 * math.pi * math.sqrt(a * (1 - a)) / depth + math.pi**2 / depth**2
            freq = float(np.mean(np.abs(estimates - a) <= band))
            worst_freq = min(worst_freq, freq)
            ok &= freq >= 0.81
    report(9, ok, f"normalization exact, worst in-band frequency {worst_freq:.4f} >= 0.81")


# ------------------------------------------------------------ criterion 10

def test_c10_norm_and_inner_product_estimators():
    eps, delta, size = 0.1, 0.05, 64
    params = QaeParams(depth=math.ceil(6 * math.pi * math.sqrt(size) / eps),
                       groups=9, group_size=1, target_failure=delta)
    rng = np.random.default_rng(100)
    streams = RngStream(100)
    hits = 0
    for k in range(50):
        w = rng.random(size)
        estimate = l1_norm_estimate(w, float(w.max()), params, streams.generator(0, k, "price"))
        hits += abs(estimate - w.sum()) <= eps * w.sum()
    for k in range(50):
        u, v = rng.random(size), rng.random(size)
        estimate = inner_product_estimate(u, v, params, streams.generator(0, k, "utility"))
        hits += abs(estimate - u @ v) <= eps * (u @ v)
    report(10, hits >= 95, f"relative error within {eps} in {hits}/100 sized trials (need 95)")


# ------------------------------------------------------------ criterion 11

def test_c11_on_the_fly_reconstruction():
    iterations = 16
    eps_p = math.log(64) / (6 * iterations)
    eps_nu = math.log(64) / (8 * iterations)
    market = gen_market(64, 64, "uniform", "sampled", 11)
    config = EstimatorConfig(mode="uniform_band", eps_p=eps_p, eps_nu=eps_nu)
    result = fpr_run(market, iterations, config, seed=11)
    iterates = replay_iterates(market, result.records)
    acc = ProductAccumulator.empty(64, 64)
    worst = 0.0
    for t in range(iterations + 1):
        closed = reconstruct_bids(market, t, acc)
        worst = max(worst, float(np.max(np.abs(closed - iterates[t]) / iterates[t])))
        if t in (0, iterations // 2):  # spot-check the scalar accessor too
            for i, j in ((0, 0), (31, 17), (63, 63)):
                scalar = on_the_fly_bid(market, i, j, t, acc)
                worst = max(worst, abs(scalar - iterates[t][i, j]) / iterates[t][i, j])
        if t < iterations:
            record = result.records[t]
            acc = accumulate(acc, record.price_estimates, record.utility_estimates)
    report(11, worst <= 1e-8, f"max relative reconstruction deviation {worst:.2e} <= 1e-8")


# ------------------------------------------------------------ criterion 12

def kkt_projection(r, budget):
    size = len(r)
    for mask in range(1, 1 << size):
        support = [k for k in range(size) if mask >> k & 1]
        tau = (sum(r[k] for k in support) - budget) / len(support)
        if all(r[k] - tau > 0 for k in support) and all(
            r[k] - tau <= 1e-12 for k in range(size) if k not in support
        ):
            return np.array([max(r[k] - tau, 0.0) for k in range(size)])
    raise AssertionError("no KKT point found")


def test_c12_simplex_projection():
    rng = np.random.default_rng(120)
    worst = 0.0
    for _ in range(1000):
        scale = float(rng.choice([0.01, 0.1, 1.0, 10.0]))
        r = rng.standard_normal(8) * scale
        budget = float(rng.random() + 0.05)
        deviation = np.max(np.abs(project_simplex(r, budget) - kkt_projection(r, budget)))
        worst = max(worst, float(deviation))
    report(12, worst <= 1e-10, f"max deviation from KKT enumeration over 1000 inputs {worst:.2e}")


# ------------------------------------------------------------ criterion 13

def final_gaps(summary, algorithm):
    return {row["seed"]: row["phi_gap"] for row in summary["finals"] if row["algorithm"] == algorithm}


def test_c13a_quantum_fpr_vs_pr(benchmark):
    # Known to fail at this scale with the default depth scaling: measured
    # amplitudes concentrate toward 1/n and fall below what a depth-8
    # measurement resolves, so the estimate-selected output cannot track the
    # exact dynamics.  Kept faithful to the stated protocol rather than
    # tuned; see the README's acceptance notes.
    _, _, summary = benchmark
    pr = final_gaps(summary, "pr")
    qfpr = final_gaps(summary, "qfpr")
    wins = sum(qfpr[s] < pr[s] for s in pr)
    report(13, wins >= 0.8 * len(pr),
           f"simulated-measurement dynamics beat exact dynamics in {wins}/{len(pr)} seeds (need 12)")


def test_c13b_pr_family_vs_pgd(benchmark):
    _, _, summary = benchmark
    pr = final_gaps(summary, "pr")
    qfpr = final_gaps(summary, "qfpr")
    pgd = final_gaps(summary, "pgd")
    wins = sum(min(pr[s], qfpr[s]) < pgd[s] for s in pr)
    report(13, wins >= 0.6 * len(pr),
           f"best of the response-dynamics family beats gradient descent in {wins}/{len(pr)} seeds (need 9)")


# ------------------------------------------------------------ criterion 14

def test_c14_determinism(tmp_path):
    config_dict = {
        "n": 16, "m": 16,
        "algorithms": ["pr", "fpr", "qfpr", "pgd"],
        "iterations": 4,
        "qae": {"depth": 8},
        "estimator": {"mode": "uniform_band", "eps_p": 0.05, "eps_nu": 0.05},
        "seeds": [0, 1, 2],
        "reference_iterations": 200,
    }
    blobs = []
    for name in ("first.csv", "second.csv"):
        config = ExperimentConfig.from_dict(dict(config_dict))
        points = run_experiment(config)
        path = tmp_path / name
        emit_curves(points, "csv", path)
        blobs.append(path.read_bytes())
    report(14, blobs[0] == blobs[1],
           f"identical pipelines produced byte-identical files ({len(blobs[0])} bytes)")
