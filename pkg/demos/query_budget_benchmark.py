"""Convergence per bid-entry query: exact dynamics vs simulated-measurement
dynamics vs projected gradient descent.

Every algorithm gets the same query budget; iteration counts follow from
each one's per-iteration accounting.  Curves land in a CSV next to this
script and a win-rate summary is printed.  Sizes here are kept small so the
demo finishes in well under a minute; raise n, m, and the seed count for a
fuller comparison.

Run: python3 demos/query_budget_benchmark.py
"""

from pathlib import Path

from marketeq import ExperimentConfig, emit_curves, run_experiment, summarize_curves

n = m = 256
base_iterations = 16
config = ExperimentConfig(
    n=n,
    m=m,
    distribution="uniform",
    budget_mode="ceei_equal",
    algorithms=("pr", "qfpr", "pgd"),
    seeds=tuple(range(5)),
    query_budget=base_iterations * 2 * n * m,
    reference_iterations=1000,
)

print(f"shared budget: {config.query_budget} bid-entry queries "
      f"({base_iterations} exact updates at {n}x{m})")
points = run_experiment(config)

out = Path(__file__).with_name("benchmark_curves.csv")
emit_curves(points, "csv", out)
print(f"wrote {len(points)} curve points to {out}")

summary = summarize_curves(points)
print("\nfinal objective gap by (algorithm, seed):")
for row in summary["finals"]:
    print(f"  {row['algorithm']:<5} seed {row['seed']}: gap {row['phi_gap']:.5f} "
          f"after {row['queries']} queries")

print("\nwin rates (lower final gap on shared seeds):")
for row in summary["win_rates"]:
    print(f"  {row['algorithm']} vs {row['against']}: {row['wins']}/{row['total']}")
