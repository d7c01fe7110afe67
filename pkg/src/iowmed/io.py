"""Delimited-text formats.

All tables are UTF-8, comma separated, ``.`` decimal point, no thousands
separators, with a header row whose first cell is ``sample_id``. Numbers
are written so that reading them back gives identical floats.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .composition import CountMatrix
from .exceptions import DataError, ParseError

ID_COLUMN = "sample_id"
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_MISSING = {"", "na", "nan", "null", "none"}


def format_number(x):
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def _parse_number(text, path, line, what):
    s = text.strip()
    if not _NUMBER.match(s):
        raise ParseError(f"malformed number {text!r} in {what}", path, line)
    return float(s)


def _read_rows(path):
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8: {exc}", path) from exc
    except OSError as exc:
        raise ParseError(str(exc), path) from exc
    # csv.reader yields one list per physical line for these unquoted formats
    numbered = [(i + 1, r) for i, r in enumerate(rows) if r]
    if not numbered:
        raise ParseError("file is empty", path)
    line, header = numbered[0]
    if header[0].lstrip("﻿").strip() != ID_COLUMN:
        raise ParseError(f"first header cell must be {ID_COLUMN!r}", path, line)
    header = [h.strip() for h in header]
    if len(set(header)) != len(header):
        dup = sorted({h for h in header if header.count(h) > 1})
        raise ParseError(f"duplicate column names {dup}", path, line)
    return path, header, numbered[1:]


def _sample_ids(path, body):
    ids = []
    seen = set()
    for line, row in body:
        sid = row[0].strip()
        if not sid:
            raise ParseError("empty sample id", path, line)
        if sid in seen:
            raise ParseError(f"duplicate sample id {sid!r}", path, line)
        seen.add(sid)
        ids.append(sid)
    return ids


def read_count_table(path) -> CountMatrix:
    path, header, body = _read_rows(path)
    taxa = header[1:]
    if len(taxa) < 2:
        raise ParseError("count table needs at least two taxa columns", path, 1)
    if not body:
        raise ParseError("count table has no samples", path)
    values = np.empty((len(body), len(taxa)))
    for i, (line, row) in enumerate(body):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", path, line)
        for j, cell in enumerate(row[1:]):
            v = _parse_number(cell, path, line, f"column {taxa[j]!r}")
            if v < 0:
                raise ParseError(f"negative count {cell!r} in column {taxa[j]!r}", path, line)
            values[i, j] = v
    return CountMatrix(values, tuple(_sample_ids(path, body)), tuple(taxa))


def write_count_table(counts: CountMatrix, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([ID_COLUMN, *counts.taxa_ids])
        for sid, row in zip(counts.sample_ids, counts.values):
            w.writerow([sid, *map(format_number, row)])


@dataclass
class MetadataTable:
    sample_ids: tuple
    columns: dict

    def column(self, name):
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"metadata has no column {name!r}; available: {sorted(self.columns)}") from None

    def aligned_to(self, sample_ids):
        """Reorder rows to ``sample_ids``; every id must match one-to-one."""
        mine, theirs = set(self.sample_ids), set(sample_ids)
        if mine != theirs:
            missing = sorted(theirs - mine)[:5]
            extra = sorted(mine - theirs)[:5]
            raise DataError(f"sample ids do not match: missing from metadata {missing}, absent from counts {extra}")
        pos = {s: i for i, s in enumerate(self.sample_ids)}
        order = np.array([pos[s] for s in sample_ids], dtype=int)
        return MetadataTable(tuple(sample_ids), {k: v[order] for k, v in self.columns.items()})


def read_metadata(path, binary_columns=(), required_columns=()) -> MetadataTable:
    """Read a numeric metadata table.

    Missing values are an error. Columns listed in ``binary_columns`` must
    hold only 0 and 1.
    """
    path, header, body = _read_rows(path)
    names = header[1:]
    for col in (*required_columns, *binary_columns):
        if col not in names:
            raise ParseError(f"missing required column {col!r}", path, 1)
    data = {name: np.empty(len(body)) for name in names}
    for i, (line, row) in enumerate(body):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", path, line)
        for name, cell in zip(names, row[1:]):
            if cell.strip().lower() in _MISSING:
                raise ParseError(f"missing value in column {name!r}", path, line)
            v = _parse_number(cell, path, line, f"column {name!r}")
            if name in binary_columns and v not in (0.0, 1.0):
                raise ParseError(f"column {name!r} must be 0/1, found {cell!r}", path, line)
            data[name][i] = v
    return MetadataTable(tuple(_sample_ids(path, body)), data)


def write_metadata(table: MetadataTable, path):
    names = list(table.columns)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([ID_COLUMN, *names])
        for i, sid in enumerate(table.sample_ids):
            w.writerow([sid, *(format_number(table.columns[c][i]) for c in names)])


def write_matrix(values, sample_ids, prefix, path):
    """Write an ``n x k`` real matrix with columns ``prefix1 .. prefixk``."""
    values = np.asarray(values, dtype=float)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([ID_COLUMN, *(f"{prefix}{k + 1}" for k in range(values.shape[1]))])
        for sid, row in zip(sample_ids, values):
            w.writerow([sid, *(repr(float(v)) for v in row)])


def read_matrix(path):
    """Read a table written by :func:`write_matrix`; returns ``(ids, values)``."""
    path, header, body = _read_rows(path)
    values = np.empty((len(body), len(header) - 1))
    for i, (line, row) in enumerate(body):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", path, line)
        values[i] = [_parse_number(c, path, line, "matrix") for c in row[1:]]
    return tuple(_sample_ids(path, body)), values


def write_record(record: dict, path):
    """Flat ``key,value`` file, one pair per line, in insertion order."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in record.items():
            w.writerow([k, repr(v) if isinstance(v, float) else v])


def read_record(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["key", "value"]:
        raise ParseError("record must start with a 'key,value' header", path, 1)
    return {k: v for k, v in rows[1:]}


def write_column(values, name, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write(name + "\n")
        for v in values:
            fh.write(repr(float(v)) + "\n")


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw!r}", path, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", path, lineno)
        out[key.replace("-", "_")] = value
    return out
