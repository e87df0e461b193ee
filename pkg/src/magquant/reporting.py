"""Machine-readable report writers: canonical JSON, CSV, and the MAGW matrix dump.

JSON output is canonical so identical (config, seed) runs are byte-identical:
keys sorted, floats in fixed scientific notation with 17 significant digits,
no locale dependence.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grids import BoxGrid
from .weyl import OperatorMatrix

__all__ = ["format_float", "canonical_json", "write_json", "write_csv",
           "write_operator", "read_operator", "MAGW_MAGIC"]

MAGW_MAGIC = b"MAGW"
_HEADER = struct.Struct("<4sIIIId")  # magic, version, dim, points_per_axis, rows, hbar
_HEADER_PAD = 32 - _HEADER.size


def format_float(x: float) -> str:
    if isinstance(x, float) and (x != x):  # NaN
        return '"nan"'
    return f"{x:.17e}"


def canonical_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            items.append(f'{inner}"{key}": {canonical_json(obj[key], indent + 1)}')
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{canonical_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, complex):
        return canonical_json({"re": obj.real, "im": obj.imag}, indent)
    if isinstance(obj, str):
        import json as _json
        return _json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(obj) + "\n")
    return path


def write_csv(path: str | Path, rows: list[dict], columns: list[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            out = []
            for c in columns:
                val = row[c]
                if isinstance(val, (float, np.floating)):
                    out.append(f"{float(val):.17e}")
                else:
                    out.append(val)
            writer.writerow(out)
    return path


def write_operator(path: str | Path, op: OperatorMatrix, hbar: float) -> Path:
    """Dump an operator as MAGW: 32-byte header + row-major little-endian complex128."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(MAGW_MAGIC, 1, op.grid.dim, op.grid.points_per_axis,
                          op.grid.size, float(hbar)) + b"\0" * _HEADER_PAD
    data = np.ascontiguousarray(op.entries, dtype="<c16")
    with path.open("wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())
    return path


def read_operator(path: str | Path, half_width: float) -> tuple[OperatorMatrix, float]:
    """Read a MAGW dump back; the half-width is not stored and must be supplied."""
    raw = Path(path).read_bytes()
    magic, version, dim, mper, rows, hbar = _HEADER.unpack(raw[:_HEADER.size])
    if magic != MAGW_MAGIC:
        raise ValueError("not a MAGW operator dump")
    if version != 1:
        raise ValueError(f"unsupported MAGW version {version}")
    entries = np.frombuffer(raw[32:], dtype="<c16").reshape(rows, rows).copy()
    grid = BoxGrid(dim, half_width, mper)
    return OperatorMatrix(entries, grid), hbar
