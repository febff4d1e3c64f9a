"""Command line interface.

`qdkit run` executes a multi-trial experiment from a JSON config and/or
flags (flags win); `qdkit report` renders figures for a finished experiment
directory.
"""

from __future__ import annotations

import argparse
import sys

from .domains import DOMAIN_NAMES
from .exceptions import QdkitError
from .harness import ExperimentConfig, run_experiment
from .schedulers import ALGORITHM_NAMES


def _parse_hyper(pairs: list[str]) -> dict:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise argparse.ArgumentTypeError(f"--hyper expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key] = float(value)
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a multi-trial experiment")
    run.add_argument("--config", help="JSON config file; flags override its values")
    run.add_argument("--algorithm", choices=ALGORITHM_NAMES)
    run.add_argument("--domain", choices=DOMAIN_NAMES)
    run.add_argument("--n", type=int, help="parameter dimension (default: domain default)")
    run.add_argument("--iterations", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int, help="base seed; trial t uses seed+t")
    run.add_argument(
        "--resolution", type=int, nargs="+", metavar="R",
        help="cells per measure dimension (one value for a square grid)",
    )
    run.add_argument("--out", help="output directory")
    run.add_argument("--logging-period", type=int)
    run.add_argument("--workers", type=int, help="parallel trials (default: cpu count)")
    run.add_argument(
        "--hyper", action="append", default=[], metavar="KEY=VALUE",
        help="hyperparameter override (sigma, sigma1, sigma2, sigma_g, eta, "
        "batch_size, initial_population); repeatable",
    )
    run.add_argument("--no-normalize", action="store_true",
                     help="disable gradient normalization (ablation)")
    run.add_argument("--og-independent", action="store_true",
                     help="independent-operator objective-gradient variant")
    run.add_argument("--include-solutions", action="store_true",
                     help="write solution components into archive CSVs")
    run.add_argument("--figures", action="store_true",
                     help="render report figures after the run")
    run.add_argument("--quiet", action="store_true")

    report = sub.add_parser("report", help="render figures for a finished experiment")
    report.add_argument("output_dir", help="experiment directory written by `run`")
    report.add_argument("--out", help="figure directory (default: alongside the CSVs)")
    return parser


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_json(args.config)
    else:
        if not args.algorithm or not args.domain:
            raise QdkitError("either --config or both --algorithm and --domain are required")
        config = ExperimentConfig(domain=args.domain, algorithm=args.algorithm)

    if args.algorithm:
        config.algorithm = args.algorithm
    if args.domain:
        config.domain = args.domain
    if args.n is not None:
        config.n = args.n
    if args.iterations is not None:
        config.iterations = args.iterations
    if args.trials is not None:
        config.trials = args.trials
    if args.seed is not None:
        config.base_seed = args.seed
    if args.resolution is not None:
        resolution = args.resolution * 2 if len(args.resolution) == 1 else args.resolution
        config.resolution = tuple(resolution)
    if args.out:
        config.output_dir = args.out
    if args.logging_period is not None:
        config.logging_period = args.logging_period
    if args.workers is not None:
        config.workers = args.workers
    if args.hyper:
        config.hyperparameters = {**config.hyperparameters, **_parse_hyper(args.hyper)}
    if args.no_normalize:
        config.normalize_gradients = False
    if args.og_independent:
        config.og_independent_operators = True
    if args.include_solutions:
        config.include_solutions = True
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = _build_config(args)
            result = run_experiment(config, verbose=not args.quiet)
            if args.figures:
                from .plots import render_report

                render_report(result.output_dir)
            return 0
        if args.command == "report":
            from .plots import render_report

            written = render_report(args.output_dir, args.out)
            for path in written:
                print(path)
            return 0
    except (QdkitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
