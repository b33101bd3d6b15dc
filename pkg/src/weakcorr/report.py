"""Deterministic serialization of reports, field dumps and sweep tables.

JSON output has sorted keys, two-space indentation and every float written
with 17 significant digits, so identical inputs give byte-identical files.
Non-finite floats become ``null``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np

from .grid import Grid


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _scalar(obj):
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if hasattr(obj, "value") and isinstance(obj.value, str):  # str enums
        return json.dumps(obj.value)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Serialize nested dicts/lists/scalars deterministically."""

    def emit(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, Mapping):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {emit(o[k], level + 1)}"
                     for k in sorted(o, key=str)]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, np.ndarray):
            o = o.tolist()
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            return "[\n" + ",\n".join(pad + emit(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, complex):
            return emit({"re": o.real, "im": o.imag}, level)
        return _scalar(o)

    return emit(obj, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


FIELD_COLUMNS = ("i", "j", "x1", "x2", "value")


def write_field_csv(path, grid: Grid, values: np.ndarray, mask: np.ndarray | None = None) -> Path:
    """Rows "i,j,x1,x2,value"; the value cell is empty where ``mask`` is False."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x1 = [format_float(x) for x in grid.x1]
    x2 = [format_float(x) for x in grid.x2]
    n1, n2 = grid.shape
    with path.open("w", newline="") as fh:
        fh.write(",".join(FIELD_COLUMNS) + "\n")
        for i in range(n1):
            row_vals = values[i]
            row_mask = None if mask is None else mask[i]
            lines = []
            for j in range(n2):
                cell = "" if row_mask is not None and not row_mask[j] else format_float(row_vals[j])
                lines.append(f"{i},{j},{x1[i]},{x2[j]},{cell}\n")
            fh.write("".join(lines))
    return path


SWEEP_COLUMNS = ("parameter", "value", "iA_mean", "iA_sup", "iP_mean", "iP_sup", "verdict")


def write_sweep_csv(path, rows: Sequence[Mapping]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            cells = []
            for col in SWEEP_COLUMNS:
                v = row[col]
                cells.append(format_float(v) if isinstance(v, (float, np.floating)) else str(v))
            fh.write(",".join(cells) + "\n")
    return path
