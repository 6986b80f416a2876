"""
Command Line Interface
======================

    python run_experiment.py reproduce --scale desk
    python run_experiment.py train --config run.json --variant cdae
    python run_experiment.py gradcheck --restarts 25

Any library error ends the command with exit status 1 and an error.json
document in the output directory; a successful command removes a stale one.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from src.experiment.config import (
    SCALES,
    VARIANT_NAMES,
    ExperimentConfig,
    apply_env_overrides,
    load_config,
    preset,
)
from src.experiment.runner import (
    classify_variant,
    cmd_classify,
    cmd_extract,
    cmd_gradcheck,
    cmd_report,
    cmd_reproduce,
    cmd_train,
)
from src.utils.errors import CdaeError, ConfigError, GradcheckFailedError
from src.utils.io import atomic_write_json

ERROR_DOCUMENT = "error.json"


def parse_architecture(text: str) -> List[int]:
    try:
        dims = [int(part) for part in text.split("-")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"architecture must look like 784-200-50, got {text!r}")
    if len(dims) < 2:
        raise argparse.ArgumentTypeError("architecture needs an input and at least one hidden size")
    return dims


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run_experiment.py",
        description="Contractive denoising autoencoders + SVM on MNIST.")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Experiment config JSON (default: the --scale preset)")
    common.add_argument("--scale", choices=SCALES, default="desk", help="Preset used without --config")
    common.add_argument("--out", help="Output (run) directory")
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--threads", type=int, help="Worker threads for pairwise SVM training")
    common.add_argument("--quiet", action="store_true", help="Only print results")

    with_variant = argparse.ArgumentParser(add_help=False)
    with_variant.add_argument("--variant", choices=VARIANT_NAMES, action="append",
                              help="Variant to run (repeatable; default: all configured)")
    with_variant.add_argument("--arch", type=parse_architecture, action="append",
                              help="Architecture such as 784-200-50 (default: all configured)")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common, with_variant], help="Pretrain stacked autoencoders")
    sub.add_parser("extract", parents=[common, with_variant], help="Write feature files")

    classify = sub.add_parser("classify", parents=[common, with_variant],
                              help="One-vs-one SVM on extracted features")
    classify.add_argument("--train-features", help="Train feature file (with --test-features)")
    classify.add_argument("--test-features", help="Test feature file (with --train-features)")
    classify.add_argument("--grid-search", action="store_true", help="Pick C and sigma on a held-out fifth")

    sub.add_parser("report", parents=[common], help="Accuracy tables for a run directory")

    gradcheck = sub.add_parser("gradcheck", parents=[common],
                               help="Analytic gradients vs finite differences")
    gradcheck.add_argument("--variant", choices=VARIANT_NAMES, action="append")
    gradcheck.add_argument("--dv", type=int, default=20, help="Visible units")
    gradcheck.add_argument("--dh", type=int, default=7, help="Hidden units")
    gradcheck.add_argument("--tolerance", type=float, default=1e-6)
    gradcheck.add_argument("--restarts", type=int, default=25)

    reproduce = sub.add_parser("reproduce", parents=[common, with_variant],
                               help="Train, extract, classify and report every variant")
    reproduce.add_argument("--grid-search", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file or preset, then CDAE_* environment, then command-line flags"""
    if args.config:
        config = load_config(args.config)
    else:
        config = apply_env_overrides(preset(args.scale))
    config = config.with_overrides(out_dir=args.out, seed=args.seed, threads=args.threads)
    if getattr(args, "grid_search", False):
        config = config.with_overrides(svm=replace(config.svm, grid_search=True))
    if getattr(args, "arch", None):
        config = config.with_overrides(architectures=args.arch)
    return config


def _selected_variants(args: argparse.Namespace, config: ExperimentConfig) -> List[str]:
    return list(args.variant) if getattr(args, "variant", None) else config.variant_names


def run_command(args: argparse.Namespace, config: ExperimentConfig, debug: bool) -> int:
    command = args.command

    if command == "gradcheck":
        report = cmd_gradcheck(d_v=args.dv, d_h=args.dh, variants=args.variant,
                               tolerance=args.tolerance, restarts=args.restarts,
                               seed=config.seed, debug=debug)
        if args.out:
            atomic_write_json(Path(args.out) / "gradcheck.json", report.to_dict())
        worst = report.worst
        if worst is not None:
            r = worst.result
            print(f"Worst: {worst.variant} {worst.activation} {worst.loss} restart {worst.restart} "
                  f"{r.block}{list(r.index)} rel={r.max_relative_error:.3e} "
                  f"(analytic {r.analytic:.9g}, numeric {r.numeric:.9g})")
        print(f"{'PASS' if report.passed else 'FAIL'} ({len(report.cases)} checks, tol {report.tolerance:g})")
        if not report.passed:
            raise GradcheckFailedError(
                f"Gradient check failed: relative error {worst.result.max_relative_error:.3e} "
                f">= {report.tolerance:g}", worst=report.to_dict()["worst"], tolerance=report.tolerance)
        return 0

    if command == "report":
        _, text = cmd_report(config.out_dir, debug=debug)
        print(text, end="")
        return 0

    if command == "reproduce":
        _, text = cmd_reproduce(config, variants=args.variant, debug=debug)
        if not debug:
            print(text, end="")
        return 0

    if command == "classify" and (args.train_features or args.test_features):
        if not (args.train_features and args.test_features):
            raise ConfigError("--train-features and --test-features go together")
        out = Path(args.out or Path(args.test_features).parent)
        result = cmd_classify(args.train_features, args.test_features, config.svm, out,
                              seed=config.seed, threads=config.threads, debug=debug)
        print(f"accuracy {result['accuracy']:.4f} ({result['correct']}/{result['total']})")
        return 0

    for layer_dims in config.architectures:
        for variant in _selected_variants(args, config):
            if command == "train":
                cmd_train(config, variant, layer_dims, debug=debug)
            elif command == "extract":
                cmd_extract(config, variant, layer_dims, debug=debug)
            elif command == "classify":
                result = classify_variant(config, variant, layer_dims, debug=debug)
                print(f"{variant.upper():<5} {'-'.join(map(str, layer_dims))}: "
                      f"accuracy {result['accuracy']:.4f}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    debug = not args.quiet
    out_dir = Path(args.out) if args.out else None
    try:
        config = resolve_config(args)
        out_dir = Path(config.out_dir) if args.command != "gradcheck" or args.out else None
        if out_dir is not None:
            (out_dir / ERROR_DOCUMENT).unlink(missing_ok=True)
        return run_command(args, config, debug)
    except CdaeError as e:
        target = (out_dir or Path(".")) / ERROR_DOCUMENT
        atomic_write_json(target, e.to_document())
        print(f"❌ {e.kind}: {e.message}", file=sys.stderr)
        print(f"   details written to {target}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("\n⏹️  Interrupted; finished layers and variants are kept for the next run")
        return 130


if __name__ == "__main__":
    sys.exit(main())
