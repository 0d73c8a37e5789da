"""CSV ingestion and emission with fixed headers."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

INPUT_HEADER = ("t", "y")
DIFF_HEADER = ("t", "y", "dhat", "lambda", "eigmaxP")
TRACE_HEADER = ("k", "t", "r", "y", "ym", "e", "u", "up", "ui", "ud")
REPORT_HEADER = ("method", "seed", "rmse")

SPACING_RTOL = 1e-9


class CsvFormatError(ValueError):
    """Malformed CSV input; ``line`` is 1-based (header is line 1)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class SignalTable:
    """Uniformly sampled signal."""

    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if t.ndim != 1 or t.shape != y.shape:
            raise ValueError(f"t and y must be 1-D of equal length, got {t.shape} and {y.shape}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)
        bad = check_uniform(t)
        if bad is not None:
            raise CsvFormatError(f"non-uniform sampling at t = {t[bad]!r}", line=bad + 2)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def Ts(self) -> float:
        if len(self.t) < 2:
            raise ValueError("sample time undefined for fewer than two samples")
        return float(self.t[1] - self.t[0])


def check_uniform(t: np.ndarray) -> int | None:
    """Index of the first sample that breaks uniform spacing, or None."""
    if len(t) < 2:
        return None
    dt = np.diff(t)
    h = dt[0]
    if not h > 0:
        return 1
    off = np.nonzero(np.abs(dt - h) > SPACING_RTOL * abs(h))[0]
    return int(off[0]) + 1 if off.size else None


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write ``rows`` under ``header``; floats use shortest round-trip repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            w.writerow([_fmt(v) for v in row])


def write_signal_csv(path, table: SignalTable) -> None:
    write_csv(path, INPUT_HEADER, zip(table.t, table.y))


def read_csv(path, header: Sequence[str]) -> list[list[str]]:
    """Rows as strings after checking the header matches exactly."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise CsvFormatError("empty file", line=1) from None
        if tuple(s.strip() for s in first) != tuple(header):
            raise CsvFormatError(f"expected header {','.join(header)}, got {','.join(first)}", line=1)
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"expected {len(header)} fields, got {len(row)}", line=reader.line_num
                )
            rows.append((reader.line_num, row))
    return rows


def load_signal_csv(path) -> SignalTable:
    rows = read_csv(path, INPUT_HEADER)
    if not rows:
        raise CsvFormatError("no data rows", line=2)
    t = np.empty(len(rows))
    y = np.empty(len(rows))
    for i, (line, (ts, ys)) in enumerate(rows):
        try:
            t[i] = float(ts)
            y[i] = float(ys)
        except ValueError:
            raise CsvFormatError(f"not a number: {ts!r}, {ys!r}", line=line) from None
        if not (math.isfinite(t[i]) and math.isfinite(y[i])):
            raise CsvFormatError(f"non-finite value: {ts!r}, {ys!r}", line=line)
    bad = check_uniform(t)
    if bad is not None:
        raise CsvFormatError(f"non-uniform sampling at t = {rows[bad][1][0]}", line=rows[bad][0])
    return SignalTable(t, y)
