"""Tests for storage.py: atomic writes and dataclass-row CSV files."""

import math
from dataclasses import dataclass

import pytest

from mtpopart.storage import append_csv, append_csv_row, atomic_write, format_cell, read_csv_dicts, read_csv_rows


@dataclass(frozen=True, slots=True)
class Row:
    step: int
    loss: float
    label: str = ""


def test_atomic_write_creates_parents(tmp_path):
    path = tmp_path / "a" / "b" / "file.txt"

    atomic_write(path, b"hello")

    assert path.read_bytes() == b"hello"
    assert list(path.parent.glob("*.tmp")) == []


def test_atomic_write_replaces(tmp_path):
    path = tmp_path / "file.txt"
    atomic_write(path, b"first")

    atomic_write(path, b"second")

    assert path.read_bytes() == b"second"


@pytest.mark.parametrize(
    ("value", "expected"),
    [(True, "1"), (False, "0"), (0.1, "0.1"), (float("nan"), "nan"), (float("inf"), "inf"), (3, "3"), ("x", "x")],
)
def test_format_cell(value, expected):
    assert format_cell(value) == expected


def test_header_written_once(tmp_path):
    path = tmp_path / "m.csv"

    append_csv_row(path, {"step": 1, "loss": 0.5})
    append_csv_row(path, {"step": 2, "loss": 0.25})

    assert path.read_text() == "step,loss\n1,0.5\n2,0.25\n"


def test_later_rows_follow_header_order(tmp_path):
    path = tmp_path / "m.csv"
    append_csv_row(path, {"step": 1, "loss": 0.5})

    append_csv_row(path, {"loss": 0.1, "step": 2})

    assert read_csv_dicts(path)[1] == {"step": "2", "loss": "0.1"}


def test_unknown_column_rejected(tmp_path):
    path = tmp_path / "m.csv"
    append_csv_row(path, {"step": 1})

    with pytest.raises(ValueError, match="not in header"):
        append_csv_row(path, {"step": 2, "extra": 1})


def test_dataclass_rows_read_back_exactly(tmp_path):
    path = tmp_path / "rows.csv"
    rows = [Row(1, 1 / 3, "a"), Row(2, 1e-300, "b")]

    for row in rows:
        append_csv(path, row)

    assert read_csv_rows(path, Row) == rows


def test_nan_survives_a_round_trip(tmp_path):
    path = tmp_path / "rows.csv"
    append_csv(path, Row(1, float("nan")))

    (row,) = read_csv_rows(path, Row)

    assert math.isnan(row.loss)


def test_missing_file_reads_empty(tmp_path):
    assert read_csv_rows(tmp_path / "none.csv", Row) == []
    assert read_csv_dicts(tmp_path / "none.csv") == []


def test_corrupt_rows_skipped(tmp_path, caplog):
    path = tmp_path / "rows.csv"
    path.write_text("step,loss,label\n1,0.5,a\nnot-a-number,0.1,b\n3,0.2,c\n")

    rows = read_csv_rows(path, Row)

    assert [r.step for r in rows] == [1, 3]
    assert "corrupt row 3" in caplog.text


def test_extra_columns_ignored(tmp_path):
    path = tmp_path / "rows.csv"
    path.write_text("step,loss,label,future\n1,0.5,a,x\n")

    assert read_csv_rows(path, Row) == [Row(1, 0.5, "a")]
