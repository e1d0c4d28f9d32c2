"""CLI handler for `mtpopart report`: summary table from stored results."""

from __future__ import annotations

import argparse
import statistics
from collections import defaultdict
from pathlib import Path

from mtpopart.config import out_root
from mtpopart.experiment.evaluation import ResultRow
from mtpopart.runtime.train_cmd import EXIT_IO, fail
from mtpopart.storage import read_csv_rows


def collect_results(root: Path) -> dict[tuple[str, str], list[ResultRow]]:
    """Every results.csv row under root, grouped by (variant, suite)."""
    groups: dict[tuple[str, str], list[ResultRow]] = defaultdict(list)
    for path in sorted(root.rglob("results.csv")):
        for row in read_csv_rows(path, ResultRow):
            groups[(row.variant, row.suite)].append(row)
    return dict(groups)


def format_report(groups: dict[tuple[str, str], list[ResultRow]]) -> str:
    lines = [f"{'variant':<10}  {'suite':<10}  {'runs':>4}  {'median':>8}  {'mean capped':>11}"]
    for (variant, suite), rows in sorted(groups.items()):
        median = statistics.fmean(r.median_normalized for r in rows)
        mean_capped = statistics.fmean(r.mean_capped for r in rows)
        lines.append(f"{variant:<10}  {suite:<10}  {len(rows):>4}  {median:>8.4f}  {mean_capped:>11.4f}")
    return "\n".join(lines)


def run_report_command(argv: list[str]) -> None:
    parser = argparse.ArgumentParser(prog="mtpopart report")
    parser.add_argument("directory", type=Path, nargs="?", default=None, help="Search root (default: MTPOPART_OUT_ROOT)")
    args = parser.parse_args(argv)

    root = args.directory or out_root()
    if not root.is_dir():
        fail(f"no such directory: {root}", EXIT_IO)
    groups = collect_results(root)
    if not groups:
        print(f"no results under {root}")
        return
    print(format_report(groups))
