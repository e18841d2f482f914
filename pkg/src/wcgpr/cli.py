"""Command-line entry point: ``wcgpr {run,sweep,validate,synth}``."""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys

import numpy as np

from .exceptions import WCGPRError
from .experiment import ConfigError, ExperimentConfig, ExperimentError, run_single, run_sweep
from .kernels import kernel_from_descriptor, validate_kernel_pair
from .synthesis import generate_improper_gp

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

log = logging.getLogger("wcgpr")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config (defaults: reference experiment)")
    common.add_argument("--seed", type=int, help="base seed")
    common.add_argument("--out", help="output path (CSV); stdout when omitted")
    common.add_argument("--trials", type=int, help="number of trials")
    common.add_argument("--predictor", choices=("widely", "proper", "both"))
    common.add_argument("-v", "--verbose", action="store_true", help="log per-trial progress")

    parser = argparse.ArgumentParser(
        prog="wcgpr", description="Widely complex GP regression experiments."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="single training-size experiment")
    sweep = sub.add_parser("sweep", parents=[common], help="training-size sweep")
    sweep.add_argument("--sizes", help="comma-separated training sizes, e.g. 50,100,200")
    val = sub.add_parser("validate", parents=[common], help="validate config and kernel pair")
    val.add_argument("--points", type=int, default=10, help="random grid nodes per subset")
    val.add_argument("--subsets", type=int, default=10, help="number of random subsets")
    sub.add_parser("synth", parents=[common], help="write one sample function as CSV")
    return parser


def _load_config(args):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    sweep = None
    if getattr(args, "sizes", None):
        try:
            sweep = tuple(int(s) for s in args.sizes.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --sizes value {args.sizes!r}") from exc
    return cfg.with_overrides(
        seed=args.seed, trials=args.trials, predictor=args.predictor, output=args.out, sweep=sweep
    )


@contextlib.contextmanager
def _open_out(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _cmd_experiment(cfg, sweep):
    report = run_sweep(cfg) if sweep else run_single(cfg)
    with _open_out(cfg.output) as fh:
        report.to_csv(fh)
    print(report.summary())
    return EXIT_OK


def _cmd_validate(cfg, args):
    print("config: ok")
    kp = kernel_from_descriptor(cfg.kernel, cfg.model)
    points = cfg.grid.points()
    rng = np.random.default_rng(cfg.seed)
    ok = True
    for i in range(args.subsets):
        idx = rng.choice(points.shape[0], size=min(args.points, points.shape[0]), replace=False)
        report = validate_kernel_pair(kp, points[idx])
        print(f"subset {i}: " + report.summary())
        ok &= report.passed
    return EXIT_OK if ok else EXIT_FAILURE


def _cmd_synth(cfg):
    sample = generate_improper_gp(cfg.model, cfg.seed)
    with _open_out(cfg.output) as fh:
        sample.to_csv(fh)
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _load_config(args)
    except WCGPRError as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command in ("run", "sweep"):
            return _cmd_experiment(cfg, args.command == "sweep")
        if args.command == "validate":
            return _cmd_validate(cfg, args)
        return _cmd_synth(cfg)
    except ExperimentError as exc:
        print(f"error {exc}", file=sys.stderr)
    except WCGPRError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error [output]: {exc}", file=sys.stderr)
    return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
