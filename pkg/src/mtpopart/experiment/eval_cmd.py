"""CLI handler for `mtpopart eval`."""

from __future__ import annotations

import argparse
from pathlib import Path

from mtpopart.checkpoint import CheckpointError, load_checkpoint
from mtpopart.experiment.evaluation import ORACLE_EPISODES, evaluate_with_cache, write_breakdown
from mtpopart.experiment.scores import UndefinedNormalizationError, aggregate
from mtpopart.runtime.train_cmd import EXIT_INVALID, EXIT_IO, fail
from mtpopart.taskworld.specs import load_suite


def run_eval_command(argv: list[str]) -> None:
    parser = argparse.ArgumentParser(prog="mtpopart eval")
    parser.add_argument("checkpoint", type=Path, help="Checkpoint file (e.g. runs/a/final.ckpt)")
    parser.add_argument("--suite", default="scale6", help="Built-in suite name or suite file")
    parser.add_argument("--episodes", type=int, default=100, help="Episodes per task")
    parser.add_argument("--seed", type=int, default=0, help="Evaluation seed")
    parser.add_argument("--oracle-episodes", type=int, default=ORACLE_EPISODES, help="Random-reference episodes")
    parser.add_argument("--breakdown", type=Path, default=None, help="Breakdown CSV (default: next to checkpoint)")
    args = parser.parse_args(argv)

    if args.episodes < 1:
        fail("--episodes must be >= 1", EXIT_INVALID)
    try:
        checkpoint = load_checkpoint(args.checkpoint)
    except OSError as exc:
        fail(f"cannot read {args.checkpoint}: {exc.strerror or exc}", EXIT_IO)
    except CheckpointError as exc:
        fail(f"{args.checkpoint}: {exc}", EXIT_INVALID)
    try:
        suite = load_suite(args.suite)
    except FileNotFoundError as exc:
        fail(str(exc), EXIT_IO)
    except ValueError as exc:
        fail(str(exc), EXIT_INVALID)

    breakdown = args.breakdown or args.checkpoint.with_name("breakdown.csv")
    try:
        records = evaluate_with_cache(
            checkpoint,
            suite,
            args.episodes,
            args.seed,
            oracle_path=breakdown.with_name("oracles.csv"),
            oracle_episodes=args.oracle_episodes,
        )
    except (CheckpointError, UndefinedNormalizationError) as exc:
        fail(str(exc), EXIT_INVALID)

    print(f"{'task':>4}  {'raw':>12}  {'random':>12}  {'optimal':>12}  {'normalized':>10}  {'capped':>8}")
    for r in records:
        print(
            f"{r.task_id:>4}  {r.raw_return:>12.4f}  {r.random_ref:>12.4f}  {r.optimal_ref:>12.4f}"
            f"  {r.normalized:>10.4f}  {r.capped:>8.4f}"
        )
    median, mean_capped = aggregate(records)
    write_breakdown(breakdown, records)
    print(f"median normalized {median:.4f}  mean capped {mean_capped:.4f}")
