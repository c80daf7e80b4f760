"""Instance generation, query-budget experiments, and convergence-curve serialization.

An experiment fixes a market size, a sampling scheme, a set of algorithms,
and (optionally) a shared bid-entry query budget.  Each algorithm then gets
as many iterations as the budget affords under its own accounting, and its
curve reports the objective of the bids the algorithm would return after
spending that many queries.  For the monotone algorithms that is simply the
current iterate; for the faulty-dynamics algorithms it is the iterate with
the best estimated objective so far, which is what they actually output.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import PR_QUERIES_PER_ENTRY, pr_run, reference_optimum
from .errors import DomainError, IoError, MarketError
from .estimators import EstimatorConfig, QaeParams
from .fpr import fpr_run, qfpr_iteration_queries, qfpr_run
from .io import market_digest
from .market import MarketInstance, validate_market
from .pgd import PGD_QUERIES_PER_ENTRY, PgdConfig, pgd_run
from .rng import RngStream

ALGORITHMS = ("pr", "fpr", "qfpr", "pgd")
DISTRIBUTIONS = ("uniform", "truncated_normal")
BUDGET_MODES = ("sampled", "ceei_equal")
FORMATS = ("csv", "json")

CURVE_FIELDS = ("algorithm", "seed", "iteration", "queries", "phi_gap", "psi")


@dataclass(frozen=True)
class CurvePoint:
    algorithm: str
    seed: int
    iteration: int
    queries: int
    phi_gap: float
    psi: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one benchmark run; mirrors the JSON config schema."""

    n: int
    m: int
    distribution: str = "uniform"
    budget_mode: str = "sampled"
    algorithms: tuple = ("pr",)
    iterations: int | dict = 16
    qae: QaeParams | None = None
    estimator: EstimatorConfig | None = None
    seeds: tuple = (0,)
    query_budget: int | None = None
    reference_iterations: int = 1000
    out: str = "curves.csv"
    format: str = "csv"

    def __post_init__(self):
        if self.n < 2 or self.m < 2:
            raise DomainError("n and m must both be at least 2")
        if not self.algorithms:
            raise DomainError("select at least one algorithm")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise DomainError(f"unknown algorithms {unknown}; choose from {ALGORITHMS}")
        if self.distribution not in DISTRIBUTIONS:
            raise DomainError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.budget_mode not in BUDGET_MODES:
            raise DomainError(f"budget_mode must be one of {BUDGET_MODES}")
        if self.format not in FORMATS:
            raise DomainError(f"format must be one of {FORMATS}")
        if not self.seeds:
            raise DomainError("at least one seed is required")
        if self.query_budget is not None and self.query_budget < 1:
            raise DomainError("query_budget must be positive")
        if self.reference_iterations < 1:
            raise DomainError("reference_iterations must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        if "algorithms" in doc:
            doc["algorithms"] = tuple(doc["algorithms"])
        if "seeds" in doc:
            doc["seeds"] = tuple(doc["seeds"])
        if isinstance(doc.get("qae"), dict):
            doc["qae"] = QaeParams(**doc["qae"])
        if isinstance(doc.get("estimator"), dict):
            est = dict(doc["estimator"])
            if isinstance(est.get("qae"), dict):
                est["qae"] = QaeParams(**est["qae"])
            doc["estimator"] = EstimatorConfig(**est)
        if isinstance(doc.get("iterations"), dict):
            doc["iterations"] = {k: int(v) for k, v in doc["iterations"].items()}
        unknown = set(doc) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise DomainError(f"unknown config fields {sorted(unknown)}")
        return cls(**doc)


def _sample_values(distribution: str, shape, gen) -> np.ndarray:
    if distribution == "uniform":
        return 1.0 - gen.random(shape)  # (0, 1]
    # Normal with mean 0.5 and variance 0.25; draws outside (0, 1] are redrawn.
    out = 0.5 + 0.5 * gen.standard_normal(shape)
    bad = (out <= 0.0) | (out > 1.0)
    while bad.any():
        out[bad] = 0.5 + 0.5 * gen.standard_normal(int(bad.sum()))
        bad = (out <= 0.0) | (out > 1.0)
    return out


def gen_market(n: int, m: int, distribution: str = "uniform", budget_mode: str = "sampled",
               seed: int = 0) -> MarketInstance:
    """Sample a random market instance.

    Values come from the chosen distribution on (0, 1]; budgets are either
    sampled the same way and normalized onto the simplex or set to 1/n for
    every buyer.  Values are divided by their maximum if any exceed 1.
    """
    if n < 2 or m < 2:
        raise DomainError("n and m must both be at least 2")
    if distribution not in DISTRIBUTIONS:
        raise DomainError(f"distribution must be one of {DISTRIBUTIONS}")
    streams = RngStream(seed)
    values = _sample_values(distribution, (n, m), streams.generator(0, 0, "values"))
    if budget_mode == "ceei_equal":
        budgets = np.full(n, 1.0 / n)
    elif budget_mode == "sampled":
        raw = _sample_values(distribution, n, streams.generator(0, 0, "budgets"))
        budgets = raw / raw.sum()
    else:
        raise DomainError(f"budget_mode must be one of {BUDGET_MODES}")
    peak = values.max()
    if peak > 1.0:
        values = values / peak
    return validate_market(budgets, values)


def _auto_depth(base_iterations: int, n: int) -> int:
    return max(2, math.isqrt(base_iterations * n) // 16)


def _base_iterations(config: ExperimentConfig) -> int:
    if config.query_budget is not None:
        return max(1, config.query_budget // (PR_QUERIES_PER_ENTRY * config.n * config.m))
    if isinstance(config.iterations, dict):
        return int(config.iterations.get("pr", 16))
    return int(config.iterations)


def resolve_qae_params(config: ExperimentConfig) -> QaeParams:
    """Explicit parameters if given, otherwise depth floor(sqrt(T * n) / 16) with defaults."""
    if config.qae is not None:
        return config.qae
    return QaeParams(depth=_auto_depth(_base_iterations(config), config.n))


def resolve_estimator_config(config: ExperimentConfig, iterations: int) -> EstimatorConfig:
    """Explicit noise config if given, otherwise uniform bands at the guarantee scale."""
    if config.estimator is not None:
        return config.estimator
    scale = math.log(config.m) / iterations
    return EstimatorConfig(
        mode="uniform_band",
        eps_p=min(0.49, scale / 6.0),
        eps_nu=min(0.49, scale / 8.0),
    )


def _per_iteration_queries(config: ExperimentConfig, algorithm: str) -> int:
    entries = config.n * config.m
    if algorithm == "pr":
        return PR_QUERIES_PER_ENTRY * entries
    if algorithm == "pgd":
        return PGD_QUERIES_PER_ENTRY * entries
    if algorithm == "fpr":
        est = config.estimator
        if est is not None and est.mode == "qae":
            return qfpr_iteration_queries(config.n, config.m, est.qae, "classical")
        return PR_QUERIES_PER_ENTRY * entries
    if algorithm == "qfpr":
        return qfpr_iteration_queries(config.n, config.m, resolve_qae_params(config), "quantum")
    raise DomainError(f"unknown algorithm {algorithm!r}")


def iterations_for(config: ExperimentConfig, algorithm: str) -> int:
    """Iteration count for one algorithm: budget-derived when a budget is set."""
    if config.query_budget is not None:
        return max(1, config.query_budget // _per_iteration_queries(config, algorithm))
    if isinstance(config.iterations, dict):
        if algorithm not in config.iterations:
            raise DomainError(f"no iteration count configured for {algorithm!r}")
        return int(config.iterations[algorithm])
    return int(config.iterations)


def _output_rows(trace, records):
    """(iteration, queries, eg, shmyrev) of the best-estimate iterate so far."""
    rows = [(0, 0, trace.points[0].eg_value, trace.points[0].shmyrev_value)]
    best_score = -math.inf
    best_iteration = 0
    for t, record in enumerate(records):
        score = -record.eg_estimate
        if score > best_score:
            best_score = score
            best_iteration = record.iteration
        chosen = trace.points[best_iteration]
        rows.append((t + 1, trace.points[t + 1].queries, chosen.eg_value, chosen.shmyrev_value))
    return rows


def _trace_rows(trace):
    return [(p.iteration, p.queries, p.eg_value, p.shmyrev_value) for p in trace.points]


def _run_algorithm(config: ExperimentConfig, market: MarketInstance, algorithm: str, seed: int):
    iterations = iterations_for(config, algorithm)
    if algorithm == "pr":
        return _trace_rows(pr_run(market, iterations))
    if algorithm == "pgd":
        return _trace_rows(pgd_run(market, PgdConfig(iterations)))
    if algorithm == "fpr":
        result = fpr_run(market, iterations, resolve_estimator_config(config, iterations), seed)
        return _output_rows(result.trace, result.records)
    if algorithm == "qfpr":
        result = qfpr_run(market, iterations, resolve_qae_params(config), seed)
        return _output_rows(result.trace, result.records)
    raise DomainError(f"unknown algorithm {algorithm!r}")


def run_experiment(config: ExperimentConfig, on_failure=None) -> list[CurvePoint]:
    """Run every (seed, algorithm) pair of an experiment and collect curve points.

    Each seed samples its own market and prices the objective gap against a
    long-run reference computed once per market.  Failures propagate unless
    ``on_failure(seed, algorithm, error)`` is supplied, in which case the
    failing pair is skipped and the partial results are kept.
    """
    points: list[CurvePoint] = []
    for seed in config.seeds:
        try:
            market = gen_market(config.n, config.m, config.distribution, config.budget_mode, seed)
            _, phi_star = reference_optimum(market, config.reference_iterations)
        except MarketError as exc:
            if on_failure is None:
                raise
            on_failure(seed, None, exc)
            continue
        for algorithm in config.algorithms:
            try:
                rows = _run_algorithm(config, market, algorithm, seed)
            except MarketError as exc:
                if on_failure is None:
                    raise
                on_failure(seed, algorithm, exc)
                continue
            points.extend(
                CurvePoint(algorithm, seed, it, q, eg - phi_star, psi) for it, q, eg, psi in rows
            )
    return points


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_json(x: float) -> str:
    # json.loads only accepts the capitalized non-finite literals
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def emit_curves(points: list[CurvePoint], fmt: str, path):
    """Write curve points as CSV or JSON with 17-significant-digit floats."""
    if not points:
        raise DomainError("no curve points to write")
    if fmt not in FORMATS:
        raise DomainError(f"format must be one of {FORMATS}")
    path = Path(path)
    if fmt == "csv":
        lines = [",".join(CURVE_FIELDS)]
        lines.extend(
            f"{p.algorithm},{p.seed},{p.iteration},{p.queries},{_fmt(p.phi_gap)},{_fmt(p.psi)}"
            for p in points
        )
        payload = "\n".join(lines) + "\n"
    else:
        rows = [
            f'{{"algorithm": "{p.algorithm}", "seed": {p.seed}, "iteration": {p.iteration}, '
            f'"queries": {p.queries}, "phi_gap": {_fmt_json(p.phi_gap)}, "psi": {_fmt_json(p.psi)}}}'
            for p in points
        ]
        payload = "[\n" + ",\n".join(rows) + "\n]\n"
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write curves to {path}: {exc}") from exc


def load_curves(path) -> list[CurvePoint]:
    """Read a curve file produced by ``emit_curves`` (format inferred from content)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read curves from {path}: {exc}") from exc
    points = []
    if text.lstrip().startswith("["):
        for row in json.loads(text):
            points.append(CurvePoint(row["algorithm"], int(row["seed"]), int(row["iteration"]),
                                     int(row["queries"]), float(row["phi_gap"]), float(row["psi"])))
        return points
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != ",".join(CURVE_FIELDS):
        raise IoError(f"{path} is not a curve file")
    for line in lines[1:]:
        algorithm, seed, iteration, queries, phi_gap, psi = line.split(",")
        points.append(CurvePoint(algorithm, int(seed), int(iteration), int(queries),
                                 float(phi_gap), float(psi)))
    return points


def summarize_curves(points: list[CurvePoint]) -> dict:
    """Final gap per (algorithm, seed) plus pairwise win rates across seeds."""
    if not points:
        raise DomainError("no curve points to summarize")
    finals: dict[tuple[str, int], CurvePoint] = {}
    order: list[tuple[str, int]] = []
    for p in points:
        key = (p.algorithm, p.seed)
        if key not in finals:
            order.append(key)
            finals[key] = p
        elif p.queries >= finals[key].queries:
            finals[key] = p
    final_rows = [
        {"algorithm": a, "seed": s, "queries": finals[(a, s)].queries, "phi_gap": finals[(a, s)].phi_gap}
        for a, s in order
    ]
    algorithms = []
    for a, _ in order:
        if a not in algorithms:
            algorithms.append(a)
    win_rates = []
    for a in algorithms:
        for b in algorithms:
            if a == b:
                continue
            shared = [s for (x, s) in order if x == a and (b, s) in finals]
            if not shared:
                continue
            wins = sum(finals[(a, s)].phi_gap < finals[(b, s)].phi_gap for s in shared)
            win_rates.append(
                {"algorithm": a, "against": b, "wins": wins, "total": len(shared),
                 "rate": wins / len(shared)}
            )
    return {"finals": final_rows, "win_rates": win_rates}


def cached_reference(market: MarketInstance, iterations: int, cache_path=None) -> float:
    """Reference objective value, reusing a cache file keyed by instance digest."""
    digest = market_digest(market)
    if cache_path is not None:
        cache_path = Path(cache_path)
        if cache_path.exists():
            try:
                doc = json.loads(cache_path.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise IoError(f"malformed reference cache {cache_path}: {exc}") from exc
            if doc.get("market_digest") == digest and doc.get("reference_iterations") == iterations:
                return float(doc["phi_star"])
    _, phi_star = reference_optimum(market, iterations)
    if cache_path is not None:
        doc = {"market_digest": digest, "reference_iterations": iterations, "phi_star": phi_star}
        try:
            with open(cache_path, "w", newline="\n") as fh:
                json.dump(doc, fh)
                fh.write("\n")
        except OSError as exc:
            raise IoError(f"cannot write reference cache {cache_path}: {exc}") from exc
    return phi_star
