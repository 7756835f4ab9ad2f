"""Plain-text formats for PL functions, atoms and check records.

Node files hold one ``x y value`` row per node; atom files hold
``node_index x y mass`` rows. Lines starting with ``#`` are comments. Floats
are written with 17 significant digits so that files round-trip exactly.
"""
from __future__ import annotations

import io as _io
import math
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _open(target, mode):
    if isinstance(target, (str, Path)):
        return open(target, mode, encoding="utf-8", newline="\n"), True
    return target, False


def _write_rows(target, header, rows):
    fh, own = _open(target, "w")
    try:
        for line in header:
            fh.write(f"# {line}\n")
        for row in rows:
            fh.write(" ".join(fmt(v) for v in row) + "\n")
    finally:
        if own:
            fh.close()


def _read_rows(source, width):
    fh, own = _open(source, "r")
    try:
        rows = []
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != width:
                raise ValueError(f"line {lineno}: expected {width} columns, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
    finally:
        if own:
            fh.close()
    return np.array(rows, dtype=float).reshape(-1, width)


def write_nodes(target, nodes, values, comments=()):
    nodes = np.asarray(nodes, float)
    values = np.asarray(values, float)
    _write_rows(target, ["x y value", *comments], np.c_[nodes, values])


def write_pl(target, f, comments=()):
    write_nodes(target, f.nodes, f.values, comments)


def read_nodes(source):
    """``(nodes, values)`` from a node file."""
    data = _read_rows(source, 3)
    return data[:, :2], data[:, 2]


def read_pl(source):
    from .geometry import build_pl
    nodes, values = read_nodes(source)
    return build_pl(nodes, values)


def write_atoms(target, f, measure, comments=()):
    rows = [(i, *f.nodes[i], m) for i, m in measure.atoms]
    _write_rows(target, ["node_index x y mass", *comments], rows)


def read_atoms(source):
    data = _read_rows(source, 4)
    return [(int(r[0]), float(r[1]), float(r[2]), float(r[3])) for r in data]


def dumps_record(obj) -> str:
    """Compact JSON with 17-digit floats and sorted keys."""
    buf = _io.StringIO()
    _dump(obj, buf)
    return buf.getvalue()


def _dump(obj, out):
    import json
    if obj is None:
        out.write("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.write("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        out.write(fmt(x) if math.isfinite(x) else json.dumps(fmt(x)))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, dict):
        out.write("{")
        for k, key in enumerate(sorted(obj)):
            if k:
                out.write(", ")
            out.write(json.dumps(str(key)) + ": ")
            _dump(obj[key], out)
        out.write("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.write("[")
        for k, item in enumerate(list(obj)):
            if k:
                out.write(", ")
            _dump(item, out)
        out.write("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
