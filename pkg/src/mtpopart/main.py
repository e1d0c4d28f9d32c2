"""Entry point for mtpopart."""

from __future__ import annotations

import sys

from mtpopart.config import setup_logging

HELP = """\
mtpopart -- multi-task actor-critic with adaptive return normalization

commands:
  mtpopart train     Train an agent on a task suite
  mtpopart eval      Score a checkpoint with its frozen policy
  mtpopart pbt       Population-based training over a suite
  mtpopart report    Summarize every results.csv under a directory
  mtpopart help      Show this help message

examples:
  mtpopart train --suite scale6 --variant popart --frames 2000000 --seed 1 --out runs/a
  mtpopart train --suite pair2 --variant baseline --set batch_size=4 --synchronous
  mtpopart eval runs/a/final.ckpt --suite scale6 --episodes 200
  mtpopart pbt --suite pair2 --population 4 --intervals 3 --out runs/pbt
  mtpopart report runs

environment:
  MTPOPART_OUT_ROOT   root for relative --out paths (default: current directory)
  MTPOPART_LOG_LEVEL  logging level (default: INFO)
"""


def _dispatch_subcommand(argv: list[str]) -> bool:
    """Route CLI subcommands. Returns True if handled."""
    if not argv or argv[0] in ("help", "--help", "-h"):
        print(HELP)
        return True
    cmd, rest = argv[0], argv[1:]
    routes: dict[str, tuple[str, str]] = {
        "train": ("mtpopart.runtime.train_cmd", "run_train_command"),
        "eval": ("mtpopart.experiment.eval_cmd", "run_eval_command"),
        "pbt": ("mtpopart.experiment.pbt_cmd", "run_pbt_command"),
        "report": ("mtpopart.experiment.report_cmd", "run_report_command"),
    }
    if cmd in routes:
        from importlib import import_module

        mod_path, func_name = routes[cmd]
        getattr(import_module(mod_path), func_name)(rest)
        return True
    return False


def main(argv: list[str] | None = None) -> None:
    args = sys.argv[1:] if argv is None else argv
    setup_logging()
    if not _dispatch_subcommand(args):
        print(f"error: unknown command {args[0]!r}\n", file=sys.stderr)
        print(HELP, file=sys.stderr)
        raise SystemExit(2)


if __name__ == "__main__":
    main()
