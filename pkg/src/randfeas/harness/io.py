"""Trace CSV files: fixed column order, 17 significant digits, no locale."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from ..exceptions import OutputError
from .runner import AggregateTrace, ReplicaResult, replica_rows

__all__ = [
    "TRACE_COLUMNS",
    "REPLICA_COLUMNS",
    "format_float",
    "write_trace_csv",
    "read_trace_csv",
    "write_replica_csv",
    "write_summary_json",
]

TRACE_COLUMNS = AggregateTrace.COLUMNS
REPLICA_COLUMNS = ("k", "gap", "infeas", "step", "n_k")


def format_float(v) -> str:
    # format() ignores the locale; .17g round-trips every float64
    return format(float(v), ".17g")


def _write(path, header, columns):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow(row)
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from None


def write_trace_csv(trace: AggregateTrace, path):
    """Header row, then one row per logged ``k``."""
    cols = [[str(int(k)) for k in trace.k]]
    for name in TRACE_COLUMNS[1:]:
        cols.append([format_float(v) for v in trace.column(name)])
    _write(path, TRACE_COLUMNS, cols)


def write_replica_csv(result: ReplicaResult, f_star, path):
    rows = replica_rows(result, f_star)
    cols = [[str(int(k)) for k in rows["k"]]]
    for name in REPLICA_COLUMNS[1:]:
        cols.append([format_float(v) for v in rows[name]])
    _write(path, REPLICA_COLUMNS, cols)


def read_trace_csv(path) -> dict:
    """Parse any trace CSV back into ``{column: float64 array}``."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = list(reader)
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from None
    if header is None:
        raise OutputError(f"{path} is empty")
    data = np.array([[float(c) for c in r] for r in rows], dtype=np.float64).reshape(len(rows), len(header))
    return {name: data[:, j].copy() for j, name in enumerate(header)}


def write_summary_json(trace: AggregateTrace, path, extra=None):
    record = {
        "name": trace.name,
        "replica_count": trace.replica_count,
        "diverged": trace.diverged,
        "gap_is_objective": trace.gap_is_objective,
        "f_star": trace.f_star,
        "replicas": [
            {"replica": r.replica, "diverged": r.diverged, "error": r.error, **r.summary}
            for r in trace.replicas
        ],
    }
    if extra:
        record.update(extra)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from None
