"""Command line entry point: ``roughsde <experiment> [--config PATH] [--out PATH] [--seed N] [--quiet]``.

Exit codes: 0 on success, 1 on configuration or argument errors, 2 when more
than 10% of the replicates diverged.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, RoughPathError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment, write_csv

MAX_DIVERGENCE = 0.10


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parser():
    parser = _Parser(prog="roughsde", description="Rough path experiment runner")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.error = parser.error
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--out", help="CSV output path (overrides the config)")
        sp.add_argument("--seed", type=int, help="base seed (overrides the config)")
        sp.add_argument("--quiet", action="store_true", help="suppress the summary line")
        if name == "ratefn":
            sp.add_argument("--velocity", help="comma-separated v for the path h_t = t v")
    return parser


def _config(args):
    data = {}
    if args.config:
        data = ExperimentConfig.from_json(args.config).to_dict()
        if data["experiment"] != args.experiment:
            raise ConfigError(f"config is for {data['experiment']!r}, not {args.experiment!r}")
    data["experiment"] = args.experiment
    if args.out is not None:
        data["out"] = args.out
    if args.seed is not None:
        data["seed"] = args.seed
    if getattr(args, "velocity", None):
        try:
            v = [float(s) for s in args.velocity.split(",")]
        except ValueError:
            raise ConfigError(f"bad velocity {args.velocity!r}") from None
        data.setdefault("params", {})
        data["params"] = dict(data["params"], velocity=v)
    return ExperimentConfig.from_dict(data)


def run_cli(argv=None):
    try:
        args = _parser().parse_args(argv)
        cfg = _config(args)
        report = run_experiment(cfg)
        if cfg.out:
            write_csv(report, cfg.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RoughPathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        if cfg.experiment == "ratefn":
            print(f"{report.value:.17g}")
        else:
            print(report.summary_line())
    if report.divergence_fraction > MAX_DIVERGENCE:
        print(
            f"error: {report.excluded} of {report.replicates} replicates diverged",
            file=sys.stderr,
        )
        return 2
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
