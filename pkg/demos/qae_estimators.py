"""The simulated measurement estimators, from raw outcome law to vector norms.

Shows the exact outcome distribution of a depth-M amplitude measurement,
the coverage of the theoretical error band, how median-of-means boosting
tightens raw draws, and the norm / inner-product estimators built on top.

Run: python3 demos/qae_estimators.py
"""

import math

import numpy as np

from marketeq import (
    QaeParams,
    RngStream,
    inner_product_estimate,
    l1_norm_estimate,
    median_of_means,
    qae_distribution,
    qae_sample,
)

streams = RngStream(2024)

print("outcome law for amplitude a = 0.3 at depth 8")
dist = qae_distribution(0.3, 8)
for z, p in enumerate(dist):
    estimate = math.sin(math.pi * z / 8) ** 2
    bar = "#" * int(round(60 * p))
    print(f"  z={z}  a~={estimate:.3f}  p={p:.4f} {bar}")

print("\nerror-band coverage (theory promises at least 8/pi^2 = 0.8106)")
for depth in (8, 32, 128):
    for a in (0.1, 0.5, 0.9):
        d = qae_distribution(a, depth)
        grid = np.sin(np.pi * np.arange(depth) / depth) ** 2
        band = 2 * math.pi * math.sqrt(a * (1 - a)) / depth + math.pi**2 / depth**2
        inside = d[np.abs(grid - a) <= band].sum()
        print(f"  depth {depth:>3}  a={a:.1f}  mass within band {inside:.4f}")

print("\nmedian-of-means vs raw draws, a = 0.37, depth 16, 2000 trials")
params = QaeParams(depth=16, groups=3, group_size=7)
gen = streams.generator(0, 0, "price")
raw = np.array([qae_sample(0.37, params, gen) for _ in range(2000)])
boosted = np.array([
    median_of_means([qae_sample(0.37, params, gen) for _ in range(21)], 3, 7)
    for _ in range(2000)
])
print(f"  raw     mean abs error {np.abs(raw - 0.37).mean():.4f}")
print(f"  boosted mean abs error {np.abs(boosted - 0.37).mean():.4f}")

print("\nvector estimators on random inputs (length 64, depth sized for 10% error)")
depth = math.ceil(6 * math.pi * math.sqrt(64) / 0.1)
sized = QaeParams(depth=depth, groups=9, group_size=1)
rng = np.random.default_rng(5)
w = rng.random(64)
estimate = l1_norm_estimate(w, float(w.max()), sized, streams.generator(0, 1, "price"))
print(f"  l1 norm: true {w.sum():.4f}  estimate {estimate:.4f}  "
      f"rel err {abs(estimate - w.sum()) / w.sum():.2%}")
u, v = rng.random(64), rng.random(64)
estimate = inner_product_estimate(u, v, sized, streams.generator(0, 1, "utility"))
print(f"  inner product: true {u @ v:.4f}  estimate {estimate:.4f}  "
      f"rel err {abs(estimate - u @ v) / (u @ v):.2%}")
