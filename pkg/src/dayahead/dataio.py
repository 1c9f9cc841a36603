"""CSV ingestion and export for KPI series.

Expected layout: a header row ``timestamp,<name_1>,...,<name_p>``
followed by one row per sampling instant with an ISO-8601 timestamp and
p decimal values. Timestamps must be strictly increasing with a
constant sampling interval (1% jitter tolerated); missing or
non-numeric cells are rejected with the offending row and column named.
Lines starting with ``#`` are treated as comments.
"""

from __future__ import annotations

import csv
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .core import DayAheadError, MultiSeries, ParameterError

#: Numeric cells are written with this many significant digits.
CSV_SIGNIFICANT_DIGITS = 12


class CsvFormatError(DayAheadError):
    """Raised when an input CSV violates the expected layout."""


def _parse_timestamp(text: str, line_no: int) -> np.datetime64:
    raw = text.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(raw)
    except ValueError:
        raise CsvFormatError(
            f"row {line_no}: invalid ISO-8601 timestamp {text!r}"
        ) from None
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return np.datetime64(dt, "ns")


def ingest_csv(path: str | Path) -> MultiSeries:
    """Read a KPI CSV into a MultiSeries, validating layout and sampling."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header: list[str] | None = None
        timestamps: list[np.datetime64] = []
        rows: list[list[float]] = []
        line_nos: list[int] = []
        for line_no, record in enumerate(reader, start=1):
            if not record or (record[0].lstrip().startswith("#")):
                continue
            if header is None:
                header = [c.strip() for c in record]
                if len(header) < 2 or header[0].lower() != "timestamp":
                    raise CsvFormatError(
                        f"row {line_no}: header must be 'timestamp,<name_1>,...', "
                        f"got {','.join(header)!r}"
                    )
                continue
            if len(record) != len(header):
                raise CsvFormatError(
                    f"row {line_no}: expected {len(header)} cells, got {len(record)}"
                )
            timestamps.append(_parse_timestamp(record[0], line_no))
            line_nos.append(line_no)
            values = []
            for col, cell in enumerate(record[1:], start=1):
                cell = cell.strip()
                if not cell:
                    raise CsvFormatError(
                        f"row {line_no}: missing value in column {header[col]!r}"
                    )
                try:
                    v = float(cell)
                except ValueError:
                    raise CsvFormatError(
                        f"row {line_no}: non-numeric value {cell!r} "
                        f"in column {header[col]!r}"
                    ) from None
                if not np.isfinite(v):
                    raise CsvFormatError(
                        f"row {line_no}: non-finite value {cell!r} "
                        f"in column {header[col]!r}"
                    )
                values.append(v)
            rows.append(values)

    if header is None:
        raise CsvFormatError(f"{path}: no header row found")
    if not rows:
        raise CsvFormatError(f"{path}: no data rows found")

    ts = np.array(timestamps, dtype="datetime64[ns]")
    if ts.size > 1:
        deltas = np.diff(ts).astype(np.int64)
        bad = np.nonzero(deltas <= 0)[0]
        if bad.size:
            raise CsvFormatError(
                f"row {line_nos[int(bad[0]) + 1]}: timestamps are not strictly increasing"
            )
        med = float(np.median(deltas))
        jitter = np.nonzero(np.abs(deltas - med) > 0.01 * med)[0]
        if jitter.size:
            raise CsvFormatError(
                f"row {line_nos[int(jitter[0]) + 1]}: irregular sampling interval "
                f"(> 1% deviation from the median)"
            )
    try:
        return MultiSeries(
            np.asarray(rows, dtype=float), timestamps=ts, dim_names=tuple(header[1:])
        )
    except ParameterError as exc:
        raise CsvFormatError(f"{path}: {exc}") from exc


def write_csv(
    series: MultiSeries,
    path: str | Path,
    header_comments: list[str] | None = None,
) -> None:
    """Write a MultiSeries as a KPI CSV (12 significant digits per value).

    ``ingest_csv(write_csv(s)) == s`` up to the stated precision.
    Comment lines, if any, are prefixed with '#' above the header.
    """
    if series.timestamps is None:
        raise ParameterError("cannot write a CSV without timestamps")
    fmt = f"%.{CSV_SIGNIFICANT_DIGITS}g"
    lines = [f"# {c}" for c in (header_comments or [])]
    lines.append("timestamp," + ",".join(series.dim_names))
    stamps = np.datetime_as_string(series.timestamps, unit="s")
    for i in range(series.n):
        cells = ",".join(fmt % v for v in series.values[i])
        lines.append(f"{stamps[i]},{cells}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def shift_one_day(timestamps: np.ndarray) -> np.ndarray:
    """Timestamps advanced by exactly one day-length (n * sampling interval)."""
    ts = np.asarray(timestamps, dtype="datetime64[ns]")
    if ts.size < 2:
        raise ParameterError("need at least 2 timestamps to infer the interval")
    interval = ts[1] - ts[0]
    return ts + interval * ts.size
