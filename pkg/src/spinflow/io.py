"""Diagnostics CSV, binary snapshots and run manifests."""
from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsRow
from .fieldgrid import Grid

MAGIC = b"SGHF"
VERSION = 1


class SnapshotError(ValueError):
    pass


class BadMagicError(SnapshotError):
    pass


class BadVersionError(SnapshotError):
    pass


class TruncatedSnapshotError(SnapshotError):
    pass


def format_real(x) -> str:
    """Shortest round-trip decimal; integral values lose the trailing ``.0``."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0"
    text = repr(x)
    if text.endswith(".0"):
        text = text[:-2]
    return text


def _open_error(path: Path, exc: OSError) -> OSError:
    return type(exc)(exc.errno, f"{exc.strerror}: {path}") if exc.errno else OSError(f"{exc}: {path}")


def write_table_csv(columns, rows: Iterable[dict], path) -> None:
    """Write dict rows under a fixed header with shortest round-trip reals and LF endings."""
    path = Path(path)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_real(row[c]) for c in columns))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise _open_error(path, exc) from exc


def write_diagnostics_csv(rows: Iterable[DiagnosticsRow], path) -> None:
    write_table_csv(CSV_COLUMNS, (dict(zip(CSV_COLUMNS, r.csv_values())) for r in rows), path)


def read_diagnostics_csv(path) -> list[dict[str, float]]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    header = text[0].split(",")
    return [dict(zip(header, map(float, line.split(",")))) for line in text[1:] if line]


def write_snapshot(field: np.ndarray, grid: Grid, path) -> None:
    """Write ``field`` (scalar or with trailing components) in the SGHF layout."""
    path = Path(path)
    field = np.asarray(field, dtype=float)
    grid.check(field)
    ncomp = int(np.prod(field.shape[grid.dim:], dtype=int)) if field.ndim > grid.dim else 1
    values = field.reshape(grid.n + (ncomp,))
    # x fastest: reverse the spatial axes, keep components innermost
    payload = np.ascontiguousarray(np.transpose(values, tuple(reversed(range(grid.dim))) + (grid.dim,)))
    header = MAGIC + struct.pack("<II", VERSION, grid.dim)
    header += struct.pack(f"<{grid.dim}I", *grid.n)
    header += struct.pack(f"<{grid.dim}d", *grid.length)
    header += struct.pack("<I", ncomp)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload.astype("<f8").tobytes())
    except OSError as exc:
        raise _open_error(path, exc) from exc


def read_snapshot(path) -> tuple[np.ndarray, Grid]:
    """Inverse of ``write_snapshot``; returns ``(field, grid)``.

    A one-component field comes back with a trailing axis of length 1.
    """
    path = Path(path)
    data = path.read_bytes()

    def take(offset: int, fmt: str):
        size = struct.calcsize(fmt)
        if offset + size > len(data):
            raise TruncatedSnapshotError(f"{path}: header truncated at byte {offset}")
        return struct.unpack_from(fmt, data, offset), offset + size

    if len(data) < 4:
        raise TruncatedSnapshotError(f"{path}: file shorter than the magic number")
    if data[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {data[:4]!r}")
    (version, ndim), off = take(4, "<II")
    if version != VERSION:
        raise BadVersionError(f"{path}: unsupported version {version}")
    if ndim not in (2, 3):
        raise SnapshotError(f"{path}: invalid dimension {ndim}")
    n, off = take(off, f"<{ndim}I")
    length, off = take(off, f"<{ndim}d")
    (ncomp,), off = take(off, "<I")
    count = int(np.prod(n)) * ncomp
    if len(data) - off < 8 * count:
        raise TruncatedSnapshotError(f"{path}: payload has {len(data) - off} bytes, expected {8 * count}")
    if len(data) - off > 8 * count:
        raise SnapshotError(f"{path}: {len(data) - off - 8 * count} trailing bytes")
    flat = np.frombuffer(data, dtype="<f8", count=count, offset=off).astype(float)
    arr = flat.reshape(tuple(reversed(n)) + (ncomp,))
    arr = np.transpose(arr, tuple(reversed(range(ndim))) + (ndim,))
    return np.ascontiguousarray(arr), Grid(n, length)


def write_manifest(manifest: dict, path) -> None:
    path = Path(path)
    lines = [f"{k} = {format_real(v) if isinstance(v, (float, int)) else v}" for k, v in manifest.items()]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise _open_error(path, exc) from exc


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if " = " in line:
            k, v = line.split(" = ", 1)
            out[k] = v
    return out


def csv_is_complete(outdir) -> bool:
    """A diagnostics file counts only if its manifest was finalized."""
    outdir = Path(outdir)
    manifest = outdir / "manifest.txt"
    if not (outdir / "diagnostics.csv").exists() or not manifest.exists():
        return False
    status = read_manifest(manifest).get("status", "running")
    return status != "running" and bool(read_manifest(manifest).get("end_time"))
