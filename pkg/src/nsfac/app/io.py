"""Diagnostics CSV and binary field snapshots.

Snapshot layout (all little-endian)::

    6s   magic "NSFAC1"
    u4   version
    u4   nx, u4 ny
    f8   Lx, f8 Ly, f8 t
    u4   field count
    per field: u2 name length, utf-8 name
    payload: each field as ny * nx float64, row-major, in header order

Files are written to ``<name>.partial`` and renamed into place, so a
complete-looking file is never a truncated one.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..diagnostics import CSV_FIELDS
from ..errors import FormatError

MAGIC = b"NSFAC1"
VERSION = 1
_HEAD = struct.Struct("<6sIIIdddI")
_NAME_LEN = struct.Struct("<H")


def _atomic_write(path, data: bytes):
    path = Path(path)
    partial = path.with_name(path.name + ".partial")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(partial, "wb") as fh:
            fh.write(data)
        os.replace(partial, path)
    except OSError as exc:
        raise FormatError(f"cannot write {path}: {exc.strerror}") from None
    return path


def write_text(path, text: str):
    return _atomic_write(path, text.encode("utf-8"))


# --- diagnostics CSV ---------------------------------------------------------


def _cell(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".17g")


def diagnostics_csv_text(records) -> str:
    lines = [",".join(CSV_FIELDS)]
    for rec in records:
        lines.append(",".join(_cell(v) for v in rec.csv_row()))
    return "\n".join(lines) + "\n"


def write_diagnostics_csv(records, path):
    """Header plus one row per record; values printed with 17 significant digits."""
    return _atomic_write(path, diagnostics_csv_text(records).encode("ascii"))


def read_diagnostics_csv(path):
    """Columns as a dict of float arrays (``step`` as int)."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    out = {}
    for k, name in enumerate(header):
        column = [r[k] for r in rows]
        out[name] = np.array(column, dtype=int if name == "step" else float)
    return out


# --- snapshots ---------------------------------------------------------------


@dataclass
class SnapshotFrame:
    nx: int
    ny: int
    Lx: float
    Ly: float
    t: float
    fields: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, arr in self.fields.items():
            if np.shape(arr) != (self.ny, self.nx):
                raise FormatError(f"field {name!r} has shape {np.shape(arr)}, "
                                  f"expected {(self.ny, self.nx)}")

    @classmethod
    def from_state(cls, state, g, t):
        return cls(g.nx, g.ny, g.Lx, g.Ly, float(t), dict(state.fields()))


def encode_snapshot(frame: SnapshotFrame) -> bytes:
    names = list(frame.fields)
    parts = [_HEAD.pack(MAGIC, VERSION, frame.nx, frame.ny, frame.Lx, frame.Ly, frame.t,
                        len(names))]
    for name in names:
        raw = name.encode("utf-8")
        parts.append(_NAME_LEN.pack(len(raw)) + raw)
    for name in names:
        parts.append(np.ascontiguousarray(frame.fields[name], dtype="<f8").tobytes())
    return b"".join(parts)


def decode_snapshot(data: bytes) -> SnapshotFrame:
    if len(data) < _HEAD.size:
        raise FormatError("snapshot shorter than its header")
    magic, version, nx, ny, Lx, Ly, t, count = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad snapshot magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported snapshot version {version}")
    offset = _HEAD.size
    names = []
    for _ in range(count):
        if offset + _NAME_LEN.size > len(data):
            raise FormatError("truncated snapshot header")
        (length,) = _NAME_LEN.unpack_from(data, offset)
        offset += _NAME_LEN.size
        names.append(data[offset:offset + length].decode("utf-8"))
        offset += length
    size = nx * ny * 8
    if len(data) - offset != count * size:
        raise FormatError(f"payload has {len(data) - offset} bytes, header implies {count * size}")
    arrays = {}
    for name in names:
        arrays[name] = np.frombuffer(data, dtype="<f8", count=nx * ny, offset=offset) \
            .reshape(ny, nx).astype(float)
        offset += size
    return SnapshotFrame(nx, ny, Lx, Ly, t, arrays)


def write_snapshot(frame: SnapshotFrame, path):
    return _atomic_write(path, encode_snapshot(frame))


def read_snapshot(path) -> SnapshotFrame:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    return decode_snapshot(data)
