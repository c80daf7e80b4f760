"""Multiplicative-error scalar estimators.

Two families live here.  The synthetic family (``noisy_scalar``) realizes a
relative error band exactly or adversarially so the faulty-dynamics theory
can be exercised deterministically.  The statistical family simulates
amplitude-estimation measurements: a target probability ``a`` is mapped to
the exact outcome distribution a depth-M phase measurement would produce,
one outcome z in [M] is drawn, and sin^2(pi z / M) is the estimate.  Norm
and inner-product estimators rescale a vector by its exact maximum, push the
mean amplitude through that measurement, and boost with a median of group
means.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, LengthMismatch, ZeroVector
from .rng import RngStream  # noqa: F401  (re-exported alongside the estimator API)

NOISE_MODES = ("exact", "adversarial_high", "adversarial_low", "uniform_band", "qae")

# Grid offsets below this count as exact alignment of the measured phase.
_ALIGNMENT_TOL = 1e-15


@dataclass(frozen=True)
class QaeParams:
    """Depth and repetition parameters for the simulated measurement estimators.

    depth acts like the number of oracle applications per measurement, so one
    estimate costs 2 * depth * groups * group_size bid queries.  groups must
    be odd so the median is a sample value.  target_failure is the failure
    budget the repetition counts are sized against; it does not change the
    simulation itself.
    """

    depth: int
    groups: int = 3
    group_size: int = 7
    target_failure: float = 0.05

    def __post_init__(self):
        if self.depth < 2:
            raise DomainError("depth must be at least 2")
        if self.groups < 1 or self.groups % 2 == 0:
            raise DomainError("groups must be a positive odd count")
        if self.group_size < 1:
            raise DomainError("group_size must be positive")
        if not 0.0 < self.target_failure < 0.5:
            raise DomainError("target_failure must lie in (0, 0.5)")

    @property
    def samples(self) -> int:
        return self.groups * self.group_size


@dataclass(frozen=True)
class EstimatorConfig:
    """Error model for price and utility estimates in the faulty dynamics.

    mode selects how the bands are realized: "exact" returns the truth,
    the adversarial modes pin estimates to an edge of the band, and
    "uniform_band" draws uniformly inside it.  mode "qae" routes every
    scalar through the simulated measurement estimators in ``qae``.
    """

    mode: str = "exact"
    eps_p: float = 0.1
    eps_nu: float = 0.1
    qae: QaeParams | None = None

    def __post_init__(self):
        if self.mode not in NOISE_MODES:
            raise DomainError(f"mode must be one of {NOISE_MODES}, got {self.mode!r}")
        if not 0.0 < self.eps_p < 0.5:
            raise DomainError("eps_p must lie in (0, 0.5)")
        if not 0.0 < self.eps_nu < 0.5:
            raise DomainError("eps_nu must lie in (0, 0.5)")
        if self.mode == "qae" and self.qae is None:
            raise DomainError("mode 'qae' requires QaeParams")


def qae_distribution(a: float, depth: int) -> np.ndarray:
    """Exact outcome probabilities of a depth-M amplitude measurement.

    For target a in [0, 1] let theta = arcsin(sqrt(a)) / pi.  Outcome
    z in [M] occurs with weight sin^2(M * d * pi) / (M^2 * sin^2(d * pi))
    where d is the wrapped distance between z / M and theta; an exactly
    aligned outcome takes the limit weight 1.  The array is renormalized to
    sum to one, absorbing rounding.
    """
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"amplitude must lie in [0, 1], got {a!r}")
    if depth < 2:
        raise DomainError("depth must be at least 2")
    theta = np.arcsin(np.sqrt(a)) / np.pi
    offset = np.abs(np.arange(depth) / depth - theta)
    delta = np.minimum(offset, 1.0 - offset)
    aligned = delta < _ALIGNMENT_TOL
    safe = np.where(aligned, 0.5, delta)  # dummy arg keeps the masked lanes finite
    weights = np.sin(depth * safe * np.pi) ** 2 / (depth**2 * np.sin(safe * np.pi) ** 2)
    weights = np.where(aligned, 1.0, weights)
    return weights / weights.sum()


def _qae_draws(a: float, depth: int, count: int, gen: np.random.Generator) -> np.ndarray:
    """Draw ``count`` estimates sin^2(pi z / M) by inverse-CDF sampling of the outcome law."""
    cdf = np.cumsum(qae_distribution(a, depth))
    z = np.searchsorted(cdf, gen.random(count), side="right")
    z = np.minimum(z, depth - 1)
    return np.sin(np.pi * z / depth) ** 2


def qae_sample(a: float, params: QaeParams, gen: np.random.Generator) -> float:
    """One simulated measurement estimate of the amplitude ``a``."""
    return float(_qae_draws(a, params.depth, 1, gen)[0])


def median_of_means(samples, groups: int, group_size: int) -> float:
    """Median of the means of consecutive same-size groups of ``samples``."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.size != groups * group_size:
        raise LengthMismatch(
            f"need exactly groups*group_size = {groups * group_size} samples, got {samples.shape}"
        )
    return float(np.median(samples.reshape(groups, group_size).mean(axis=1)))


def l1_norm_estimate(w, w_max: float, params: QaeParams, gen: np.random.Generator) -> float:
    """Estimate the l1 norm of a nonnegative vector with known exact maximum.

    The vector is rescaled by w_max, its mean entry becomes the measured
    amplitude, and the boosted estimate is scaled back:
    result = median_of_means(draws) * len(w) * w_max.  Relative accuracy eps
    needs depth of order sqrt(len(w)) / eps.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise DomainError("w must be a vector")
    if w_max <= 0.0:
        raise ZeroVector("norm estimation requires a nonzero vector")
    a = min(float(w.sum()) / (w_max * w.size), 1.0)
    draws = _qae_draws(a, params.depth, params.samples, gen)
    return median_of_means(draws, params.groups, params.group_size) * w.size * w_max


def inner_product_estimate(u, v, params: QaeParams, gen: np.random.Generator) -> float:
    """Estimate the inner product of two nonnegative vectors.

    Forms the elementwise product, finds its maximum exactly, and estimates
    the product's l1 norm.  An identically zero product returns 0.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise LengthMismatch(f"vectors must share a 1-d shape, got {u.shape} and {v.shape}")
    z = u * v
    z_max = float(z.max())
    if z_max == 0.0:
        return 0.0
    return l1_norm_estimate(z, z_max, params, gen)


def noisy_scalar(true_value: float, eps: float, mode: str, gen: np.random.Generator | None = None) -> float:
    """Apply one synthetic realization of a relative error band to a positive scalar."""
    if true_value <= 0.0:
        raise DomainError("true_value must be positive")
    if mode == "exact":
        return true_value
    if not 0.0 < eps < 0.5:
        raise DomainError("eps must lie in (0, 0.5)")
    if mode == "adversarial_high":
        return true_value * (1.0 + eps)
    if mode == "adversarial_low":
        return true_value * (1.0 - eps)
    if mode == "uniform_band":
        if gen is None:
            raise DomainError("uniform_band mode needs a generator")
        return true_value * (1.0 + eps * (2.0 * gen.random() - 1.0))
    raise DomainError(f"unknown noise mode {mode!r}")
