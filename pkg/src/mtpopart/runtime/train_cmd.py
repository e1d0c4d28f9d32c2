"""CLI handler for `mtpopart train`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import NoReturn

from mtpopart import run_config
from mtpopart.config import resolve_out_dir
from mtpopart.experiment.evaluation import ResultRow, append_result, evaluate_with_cache, write_breakdown
from mtpopart.experiment.scores import UndefinedNormalizationError, aggregate
from mtpopart.experiment.variants import VARIANTS
from mtpopart.run_config import RunConfig
from mtpopart.runtime.training import run_training
from mtpopart.taskworld.specs import load_suite

EXIT_IO = 1
EXIT_INVALID = 2


def fail(message: str, code: int) -> NoReturn:
    print(f"error: {message}", file=sys.stderr)
    sys.exit(code)


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by every command that trains."""
    parser.add_argument("--config", type=Path, default=None, help="key = value config file")
    parser.add_argument("--suite", default=None, help="Built-in suite name or suite file")
    parser.add_argument("--variant", choices=VARIANTS, default=None, help="Agent variant")
    parser.add_argument("--frames", type=int, default=None, help="Frame budget, summed across tasks")
    parser.add_argument("--seed", type=int, default=None, help="Root seed")
    parser.add_argument("--out", default=None, help="Output directory (relative to MTPOPART_OUT_ROOT)")
    parser.add_argument("--synchronous", action="store_true", help="Deterministic actor/learner alternation")
    parser.add_argument(
        "--show-config", action="store_true", help="Print the resolved settings, marking defaults, and exit"
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override any config key (repeatable)",
    )


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file, then explicit flags, then --set pairs. Exits on bad input."""
    try:
        config = run_config.load(args.config) if args.config else RunConfig()
    except OSError as exc:
        fail(f"cannot read config {args.config}: {exc.strerror or exc}", EXIT_IO)
    except ValueError as exc:
        fail(f"{args.config}: {exc}", EXIT_INVALID)

    pairs: dict[str, str] = {}
    for key in ("suite", "variant", "frames", "seed", "out"):
        value = getattr(args, key)
        if value is not None:
            pairs[key] = str(value)
    if args.synchronous:
        pairs["synchronous"] = "on"
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            fail(f"--set expects KEY=VALUE, got {item!r}", EXIT_INVALID)
        pairs[key.strip()] = value.strip()
    try:
        config = run_config.apply_overrides(config, pairs)
    except ValueError as exc:
        fail(str(exc), EXIT_INVALID)

    errors = run_config.validate(config)
    if errors:
        for err in errors:
            print(f"error: {err}", file=sys.stderr)
        sys.exit(EXIT_INVALID)
    return config


def run_train_command(argv: list[str]) -> None:
    parser = argparse.ArgumentParser(prog="mtpopart train")
    add_run_arguments(parser)
    args = parser.parse_args(argv)
    config = resolve_run_config(args)
    if args.show_config:
        print(run_config.format_all(config))
        return

    out_dir = resolve_out_dir(config.out)
    result = run_training(config, out_dir=out_dir)
    print(
        f"trained {config.variant} on {config.suite}: {result.frames_total} frames, "
        f"{result.steps} learner steps, mean staleness {result.mean_staleness:.2f}"
    )
    if config.eval_episodes == 0:
        print(f"wrote {out_dir}")
        return

    suite = load_suite(config.suite)
    try:
        records = evaluate_with_cache(
            result.checkpoint,
            suite,
            config.eval_episodes,
            config.seed,
            oracle_path=out_dir / "oracles.csv",
            oracle_episodes=config.oracle_episodes,
        )
    except UndefinedNormalizationError as exc:
        print(f"not scored: {exc}")
        return
    median, mean_capped = aggregate(records)
    write_breakdown(out_dir / "breakdown.csv", records)
    append_result(out_dir / "results.csv", ResultRow(config.variant, suite.name, median, mean_capped))
    print(f"median normalized {median:.4f}  mean capped {mean_capped:.4f}  ({out_dir})")
