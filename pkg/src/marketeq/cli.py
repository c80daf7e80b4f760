"""Command line entry points.

Subcommands: ``gen`` writes a sampled market to a file, ``run`` executes an
experiment described by flags or a JSON config, ``reference`` computes and
caches the long-run objective value for a market file, and ``compare``
summarizes a curve file.  Exit codes: 0 success, 1 usage error, 2 runtime
error.
"""

import argparse
import json
import sys
from pathlib import Path

from .errors import MarketError
from .harness import (
    ALGORITHMS,
    BUDGET_MODES,
    DISTRIBUTIONS,
    FORMATS,
    ExperimentConfig,
    cached_reference,
    emit_curves,
    gen_market,
    load_curves,
    run_experiment,
    summarize_curves,
)
from .io import load_market, market_digest, save_market


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="marketeq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="sample a market instance and write it to a file")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--dist", choices=DISTRIBUTIONS, default="uniform")
    gen.add_argument("--budget-mode", choices=BUDGET_MODES, default="sampled")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    run = sub.add_parser("run", help="run an experiment and write convergence curves")
    run.add_argument("--config", help="JSON file mirroring the experiment config fields")
    run.add_argument("--n", type=int)
    run.add_argument("--m", type=int)
    run.add_argument("--dist", choices=DISTRIBUTIONS)
    run.add_argument("--budget-mode", choices=BUDGET_MODES)
    run.add_argument("--seed", help="comma-separated seed list")
    run.add_argument("--algo", help="comma-separated subset of " + ",".join(ALGORITHMS))
    run.add_argument("--iters", type=int)
    run.add_argument("--query-budget", type=int)
    run.add_argument("--eps-p", type=float)
    run.add_argument("--eps-nu", type=float)
    run.add_argument("--noise-mode")
    run.add_argument("--qae-m", type=int, help="measurement depth")
    run.add_argument("--qae-groups", type=int)
    run.add_argument("--qae-group-size", type=int)
    run.add_argument("--delta", type=float, help="estimator failure budget")
    run.add_argument("--out")
    run.add_argument("--format", choices=FORMATS)

    ref = sub.add_parser("reference", help="compute and cache the reference objective of a market file")
    ref.add_argument("market", help="market file written by gen")
    ref.add_argument("--iters", type=int, default=1000)
    ref.add_argument("--out", help="cache file (default: <market>.ref.json)")

    cmp_ = sub.add_parser("compare", help="summarize a curve file: final gaps and win rates")
    cmp_.add_argument("curves", help="curve file written by run")
    cmp_.add_argument("--out", help="also write the summary as JSON")

    return parser


def _cmd_gen(args) -> int:
    market = gen_market(args.n, args.m, args.dist, args.budget_mode, args.seed)
    save_market(market, args.out)
    print(f"wrote {args.n}x{args.m} market to {args.out}")
    return 0


def _config_from_args(args) -> ExperimentConfig:
    doc = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file {path} does not exist")
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot parse config file {path}: {exc}")
    overrides = {
        "n": args.n,
        "m": args.m,
        "distribution": args.dist,
        "budget_mode": args.budget_mode,
        "iterations": args.iters,
        "query_budget": args.query_budget,
        "out": args.out,
        "format": args.format,
    }
    for key, value in overrides.items():
        if value is not None:
            doc[key] = value
    if args.seed is not None:
        doc["seeds"] = [int(s) for s in str(args.seed).split(",") if s != ""]
    if args.algo is not None:
        doc["algorithms"] = [a for a in args.algo.split(",") if a]
    qae_flags = {
        "depth": args.qae_m,
        "groups": args.qae_groups,
        "group_size": args.qae_group_size,
        "target_failure": args.delta,
    }
    qae_flags = {k: v for k, v in qae_flags.items() if v is not None}
    if qae_flags:
        base = doc.get("qae") if isinstance(doc.get("qae"), dict) else {}
        merged = {**base, **qae_flags}
        if "depth" not in merged:
            raise UsageError("--qae-groups/--qae-group-size/--delta need --qae-m or a config depth")
        doc["qae"] = merged
    est_flags = {"eps_p": args.eps_p, "eps_nu": args.eps_nu, "mode": args.noise_mode}
    est_flags = {k: v for k, v in est_flags.items() if v is not None}
    if est_flags:
        base = doc.get("estimator") if isinstance(doc.get("estimator"), dict) else {}
        doc["estimator"] = {**base, **est_flags}
    if "n" not in doc or "m" not in doc:
        raise UsageError("specify --n and --m or provide them in the config file")
    try:
        return ExperimentConfig.from_dict(doc)
    except (MarketError, TypeError) as exc:
        raise UsageError(f"invalid experiment config: {exc}")


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    failures = []
    points = run_experiment(config, on_failure=lambda s, a, e: failures.append((s, a, e)))
    if points:
        emit_curves(points, config.format, config.out)
        print(f"wrote {len(points)} curve points to {config.out}")
    for seed, algorithm, exc in failures:
        where = f"seed {seed}" + (f", {algorithm}" if algorithm else "")
        print(f"failed: {where}: {exc}", file=sys.stderr)
    return 2 if failures else 0


def _cmd_reference(args) -> int:
    path = Path(args.market)
    if not path.exists():
        raise UsageError(f"market file {path} does not exist")
    market = load_market(path)
    cache = Path(args.out) if args.out else path.with_suffix(path.suffix + ".ref.json")
    phi_star = cached_reference(market, args.iters, cache)
    print(f"market {market_digest(market)[:12]} reference objective {phi_star!r} (cache: {cache})")
    return 0


def _cmd_compare(args) -> int:
    path = Path(args.curves)
    if not path.exists():
        raise UsageError(f"curve file {path} does not exist")
    summary = summarize_curves(load_curves(path))
    print("algorithm  seed  final_queries  final_phi_gap")
    for row in summary["finals"]:
        print(f"{row['algorithm']:<9}  {row['seed']:<4}  {row['queries']:<13}  {row['phi_gap']:.6g}")
    if summary["win_rates"]:
        print("\nwin rates (final gap strictly lower, shared seeds):")
        for row in summary["win_rates"]:
            print(f"  {row['algorithm']} vs {row['against']}: {row['wins']}/{row['total']}"
                  f" = {row['rate']:.0%}")
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    return 0


_HANDLERS = {"gen": _cmd_gen, "run": _cmd_run, "reference": _cmd_reference, "compare": _cmd_compare}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MarketError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
