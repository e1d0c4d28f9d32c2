"""Shared file I/O: atomic writes and dataclass-row CSV files."""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, TypeVar

T = TypeVar("T")
log = logging.getLogger(__name__)


def atomic_write(path: Path, data: bytes) -> None:
    """Write data to path atomically via tempfile + os.replace."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        os.write(fd, data)
    finally:
        os.close(fd)
    os.replace(tmp, path)


def format_cell(value: Any) -> str:
    """repr for floats keeps round trips exact; nan/inf stay readable."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def append_csv_row(filepath: Path, row: dict[str, Any]) -> None:
    """Append one row; the header is written when the file is new. Column order follows the first row."""
    filepath.parent.mkdir(parents=True, exist_ok=True)
    new_file = not filepath.exists() or filepath.stat().st_size == 0
    if new_file:
        columns = list(row)
    else:
        with filepath.open(newline="") as f:
            columns = next(csv.reader(f))
        missing = set(row) - set(columns)
        if missing:
            raise ValueError(f"{filepath.name}: row has columns not in header: {sorted(missing)}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if new_file:
        writer.writerow(columns)
    writer.writerow([format_cell(row.get(c, "")) for c in columns])
    with filepath.open("a", newline="") as f:
        f.write(buf.getvalue())


def append_csv(filepath: Path, item: Any) -> None:
    append_csv_row(filepath, dataclasses.asdict(item))


def read_csv_dicts(filepath: Path) -> list[dict[str, str]]:
    if not filepath.exists():
        return []
    with filepath.open(newline="") as f:
        return list(csv.DictReader(f))


def _coerce(raw: str, annotation: Any) -> Any:
    kind = annotation if isinstance(annotation, str) else getattr(annotation, "__name__", str(annotation))
    if kind in ("int", "int | None"):
        return int(raw)
    if kind in ("float", "float | None"):
        return float(raw)
    if kind == "bool":
        return raw.strip().lower() in ("1", "true", "yes")
    return raw


def read_csv_rows(filepath: Path, cls: type[T]) -> list[T]:
    """Skips corrupt rows; filters to known dataclass fields for forward compatibility."""
    fields = {f.name: f.type for f in dataclasses.fields(cls)}  # type: ignore[arg-type]
    result: list[T] = []
    for lineno, raw in enumerate(read_csv_dicts(filepath), start=2):
        try:
            values = {k: _coerce(v, fields[k]) for k, v in raw.items() if k in fields}
            result.append(cls(**values))
        except (ValueError, TypeError):
            log.warning("Skipping corrupt row %d in %s", lineno, filepath)
    return result
