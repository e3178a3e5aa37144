"""CSV time-series ingestion and export.

Formats (ISO-8601 UTC timestamps):

    price   timestamp,eur_per_kwh
    wind    timestamp,wind_ms
    demand  timestamp,household_id,kwh
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

COLUMNS = {"price": "eur_per_kwh", "wind": "wind_ms", "demand": "kwh"}
HOUR = np.timedelta64(3600, "s")


class IngestionError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class SeriesFile:
    kind: str
    timestamps: np.ndarray  # datetime64[s], UTC
    values: np.ndarray
    household_id: str | None = None

    def __len__(self) -> int:
        return self.values.size

    def days(self) -> np.ndarray:
        """Values reshaped to (n_days, 24); hourly series only."""
        if self.values.size % 24:
            raise ValueError(f"{self.values.size} points is not a whole number of days")
        return self.values.reshape(-1, 24)


def parse_timestamp(text: str) -> np.datetime64:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return np.datetime64(dt, "s")


def format_timestamp(ts: np.datetime64) -> str:
    return str(np.datetime64(ts, "s")) + "Z"


def _read(path: Path, kind: str):
    if kind not in COLUMNS:
        raise ValueError(f"unknown series kind {kind!r}; expected one of {sorted(COLUMNS)}")
    expected = ["timestamp", "household_id", COLUMNS[kind]] if kind == "demand" else ["timestamp", COLUMNS[kind]]
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IngestionError(path, None, str(exc)) from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != expected:
            raise IngestionError(path, 1, f"expected header {','.join(expected)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise IngestionError(path, lineno, f"expected {len(expected)} fields, got {len(row)}")
            try:
                ts = parse_timestamp(row[0])
            except ValueError as exc:
                raise IngestionError(path, lineno, f"bad timestamp {row[0]!r}") from exc
            try:
                val = float(row[-1])
            except ValueError as exc:
                raise IngestionError(path, lineno, f"bad value {row[-1]!r}") from exc
            if not np.isfinite(val) or val < 0:
                raise IngestionError(path, lineno, f"negative or non-finite value {val}")
            yield lineno, ts, (row[1].strip() if kind == "demand" else None), val


def _finish(path, kind, lines, stamps, values, household_id=None) -> SeriesFile:
    ts = np.array(stamps, dtype="datetime64[s]")
    vals = np.array(values, dtype=float)
    if ts.size == 0:
        raise IngestionError(path, None, "no data rows")
    steps = np.diff(ts)
    bad = np.flatnonzero(steps <= np.timedelta64(0, "s"))
    if bad.size:
        raise IngestionError(path, lines[bad[0] + 1], "timestamps must be strictly increasing")
    if steps.size and steps.min() < HOUR:
        hours = ts.astype("datetime64[h]")
        uniq, inverse = np.unique(hours, return_inverse=True)
        sums = np.bincount(inverse, weights=vals)
        counts = np.bincount(inverse)
        ts, vals = uniq.astype("datetime64[s]"), sums / counts
    return SeriesFile(kind, ts, vals, household_id)


def load_series(path: str | Path, kind: str, household_id: str | None = None) -> SeriesFile:
    """Parse and validate one series; finer-than-hourly input is averaged per hour.

    For ``kind="demand"`` pass ``household_id`` to pick one household, or use
    :func:`load_demand` to get them all.
    """
    path = Path(path)
    if kind == "demand":
        table = load_demand(path)
        if household_id is None:
            if len(table) != 1:
                raise ValueError("demand file holds several households; pass household_id")
            return next(iter(table.values()))
        if household_id not in table:
            raise IngestionError(path, None, f"no rows for household {household_id!r}")
        return table[household_id]
    lines, stamps, values = [], [], []
    for lineno, ts, _, val in _read(path, kind):
        lines.append(lineno)
        stamps.append(ts)
        values.append(val)
    return _finish(path, kind, lines, stamps, values)


def load_demand(path: str | Path) -> dict[str, SeriesFile]:
    path = Path(path)
    grouped: dict[str, tuple[list, list, list]] = {}
    for lineno, ts, hid, val in _read(path, "demand"):
        g = grouped.setdefault(hid, ([], [], []))
        g[0].append(lineno)
        g[1].append(ts)
        g[2].append(val)
    if not grouped:
        raise IngestionError(path, None, "no data rows")
    return {hid: _finish(path, "demand", *g, household_id=hid) for hid, g in grouped.items()}


def write_series(series: SeriesFile | list[SeriesFile], path: str | Path) -> None:
    items = series if isinstance(series, list) else [series]
    kind = items[0].kind
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if kind == "demand":
            w.writerow(["timestamp", "household_id", "kwh"])
            for s in items:
                for ts, v in zip(s.timestamps, s.values):
                    w.writerow([format_timestamp(ts), s.household_id, repr(float(v))])
        else:
            w.writerow(["timestamp", COLUMNS[kind]])
            for ts, v in zip(items[0].timestamps, items[0].values):
                w.writerow([format_timestamp(ts), repr(float(v))])
