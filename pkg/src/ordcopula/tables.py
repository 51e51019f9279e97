"""Delimited text in and out."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .fitting import Dataset


class TableError(ValueError):
    pass


def detect_delimiter(header: str) -> str:
    return "\t" if "\t" in header else ","


def read_table(path, columns=None, filters=()) -> Dataset:
    """Read a header-first delimited file.

    filters are (column, value) pairs compared as strings before numeric
    conversion, so text columns can select cases.  Only the requested
    columns must be numeric; every row must have the header's arity.
    """
    with open(path, newline="") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines:
        raise TableError(f"{path}: empty file")
    delim = detect_delimiter(lines[0])
    rows = list(csv.reader(io.StringIO(text), delimiter=delim))
    header = [h.strip() for h in rows[0]]
    width = len(header)
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise TableError(f"{path}: row {lineno} has {len(row)} fields, expected {width}")
        body.append((lineno, [c.strip() for c in row]))
    index = {h: i for i, h in enumerate(header)}
    for col, _ in filters:
        if col not in index:
            raise TableError(f"{path}: filter column {col!r} not in header")
    body = [(ln, r) for ln, r in body if all(r[index[c]] == v for c, v in filters)]
    columns = list(columns) if columns else header
    for c in columns:
        if c not in index:
            raise TableError(f"{path}: column {c!r} not in header ({', '.join(header)})")
    out = {c: np.empty(len(body)) for c in columns}
    for k, (lineno, r) in enumerate(body):
        for c in columns:
            cell = r[index[c]]
            try:
                val = float(cell)
            except ValueError:
                raise TableError(f"{path}: row {lineno} column {c!r}: non-numeric value {cell!r}") from None
            if not math.isfinite(val):
                raise TableError(f"{path}: row {lineno} column {c!r}: non-finite value {cell!r}")
            out[c][k] = val
    desc = ",".join(f"{c}={v}" for c, v in filters)
    return Dataset(out, desc)


def fmt(x) -> str:
    """17 significant digits for reals; plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    if x is None:
        return "NA"
    return str(x)


def write_columns(fh, names, rows) -> None:
    fh.write("\t".join(names) + "\n")
    for row in rows:
        fh.write("\t".join(fmt(v) for v in row) + "\n")


def write_pairs(fh, pairs, structured: bool = False) -> None:
    """key<TAB>value lines, or one JSON object when structured."""
    if structured:
        obj = {k: _jsonable(v) for k, v in pairs}
        fh.write(json.dumps(obj, indent=1) + "\n")
        return
    for k, v in pairs:
        fh.write(f"{k}\t{fmt(v)}\n")


def write_rows(fh, names, rows, structured: bool = False) -> None:
    if structured:
        recs = [{n: _jsonable(v) for n, v in zip(names, row)} for row in rows]
        fh.write(json.dumps(recs, indent=1) + "\n")
        return
    write_columns(fh, names, rows)


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # repr round-trips; non-finite values become strings
        return v if math.isfinite(v) else str(v)
    if v is None:
        return None
    return str(v)
