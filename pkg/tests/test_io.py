import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinflow.fieldgrid import Grid
from spinflow.flow import FlowConfig, run
from spinflow.io import (
    BadMagicError,
    BadVersionError,
    SnapshotError,
    TruncatedSnapshotError,
    csv_is_complete,
    format_real,
    read_diagnostics_csv,
    read_manifest,
    read_snapshot,
    write_diagnostics_csv,
    write_manifest,
    write_snapshot,
)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_real_round_trips(x):
    assert float(format_real(x)) == x


def test_format_real_tokens():
    assert format_real(0.0) == "0" and format_real(-0.0) == "0"
    assert format_real(2.0) == "2" and format_real(0.1) == "0.1"
    assert format_real(float("nan")) == "nan" and format_real(True) == "1"


def test_empty_csv_is_header_only(tmp_path):
    path = tmp_path / "d.csv"
    write_diagnostics_csv([], path)
    assert path.read_bytes() == (b"step,t,dt,energy,weighted_l2,weighted_h1,min_rho,max_rho,"
                                 b"nodal_fraction,resA_l2,resA_linf,energy_gap\n")


def test_constant_run_energy_column(tmp_path):
    run(FlowConfig(n=(16, 16), init="constant", t_end=1.0, outdir=str(tmp_path)), max_steps=3)
    lines = (tmp_path / "diagnostics.csv").read_bytes().split(b"\n")
    assert b"\r" not in b"".join(lines)
    rows = [line.split(b",") for line in lines[1:] if line]
    assert len(rows) == 4 and all(r[3] == b"0" for r in rows)


def test_csv_deterministic(tmp_path):
    for name in ("a", "b"):
        run(FlowConfig(n=(16, 16), t_end=1.0, outdir=str(tmp_path / name)), max_steps=4)
    assert (tmp_path / "a/diagnostics.csv").read_bytes() == (tmp_path / "b/diagnostics.csv").read_bytes()
    rows = read_diagnostics_csv(tmp_path / "a/diagnostics.csv")
    assert [r["step"] for r in rows] == [0, 1, 2, 3, 4]


def test_csv_io_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        write_diagnostics_csv([], blocker / "d.csv")


def test_snapshot_round_trip_bits(tmp_path, rng):
    g = Grid((16, 12, 10), (1.0, 2.0, 3.0))
    f = rng.standard_normal(g.n + (4,))
    f[0, 0, 0, 0] = -0.0
    write_snapshot(f, g, tmp_path / "s.sghf")
    back, g2 = read_snapshot(tmp_path / "s.sghf")
    assert g2 == g
    assert back.tobytes() == f.tobytes()


def test_snapshot_layout_x_fastest(tmp_path):
    g = Grid((8, 9), (1.0, 1.0))
    f = np.arange(72, dtype=float).reshape(8, 9)
    write_snapshot(f, g, tmp_path / "s.sghf")
    data = (tmp_path / "s.sghf").read_bytes()
    assert data[:4] == b"SGHF"
    assert struct.unpack_from("<IIII", data, 4) == (1, 2, 8, 9)
    off = 4 + 16 + 16 + 4
    assert struct.unpack_from("<I", data, off - 4) == (1,)
    first = struct.unpack_from("<3d", data, off)
    assert first == (f[0, 0], f[1, 0], f[2, 0])


def test_snapshot_errors(tmp_path, rng):
    g = Grid.cube(2, 8, 1.0)
    path = tmp_path / "s.sghf"
    write_snapshot(rng.standard_normal(g.n + (4,)), g, path)
    data = path.read_bytes()
    (tmp_path / "t").write_bytes(data[:-5])
    with pytest.raises(TruncatedSnapshotError):
        read_snapshot(tmp_path / "t")
    (tmp_path / "h").write_bytes(data[:10])
    with pytest.raises(TruncatedSnapshotError):
        read_snapshot(tmp_path / "h")
    (tmp_path / "m").write_bytes(b"HDF5" + data[4:])
    with pytest.raises(BadMagicError):
        read_snapshot(tmp_path / "m")
    (tmp_path / "v").write_bytes(data[:4] + struct.pack("<I", 2) + data[8:])
    with pytest.raises(BadVersionError):
        read_snapshot(tmp_path / "v")
    (tmp_path / "x").write_bytes(data + b"\0")
    with pytest.raises(SnapshotError):
        read_snapshot(tmp_path / "x")


def test_manifest_and_completeness(tmp_path):
    write_manifest({"status": "running", "end_time": ""}, tmp_path / "manifest.txt")
    write_diagnostics_csv([], tmp_path / "diagnostics.csv")
    assert not csv_is_complete(tmp_path)
    write_manifest({"status": "completed", "end_time": "now", "x": 0.5}, tmp_path / "manifest.txt")
    assert csv_is_complete(tmp_path)
    assert read_manifest(tmp_path / "manifest.txt")["x"] == "0.5"
    assert not csv_is_complete(tmp_path / "missing")
