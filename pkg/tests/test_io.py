import numpy as np
import pytest

from nsfac import initial
from nsfac.app import io
from nsfac.diagnostics import CSV_FIELDS, DiagnosticsSeries
from nsfac.errors import FormatError
from nsfac.grid import GridSpec
from nsfac.solver import Model


def _frame():
    rng = np.random.default_rng(0)
    fields = {"rho": rng.normal(size=(3, 5)), "chi": rng.normal(size=(3, 5))}
    fields["rho"][0, 0] = np.nextafter(1.0, 2.0)
    return io.SnapshotFrame(5, 3, 1.5, 0.9, 0.125, fields)


def test_empty_series_writes_header_only(tmp_path):
    path = io.write_diagnostics_csv([], tmp_path / "d.csv")
    assert path.read_text() == ",".join(CSV_FIELDS) + "\n"


def test_csv_round_trip(tmp_path):
    g, model = GridSpec(8, 8), Model()
    series = DiagnosticsSeries()
    st = initial.bubble(g, model)
    series.record(0, 0.0, 0.0, st, g, model)
    series.record(7, 0.5, 0.01, st, g, model)
    path = io.write_diagnostics_csv(series.records, tmp_path / "d.csv")
    cols = io.read_diagnostics_csv(path)
    assert list(cols) == list(CSV_FIELDS)
    assert cols["step"].tolist() == [0, 7]
    assert cols["total_energy"][1] == series[1].total_energy


def test_snapshot_round_trip_bit_exact(tmp_path):
    frame = _frame()
    path = io.write_snapshot(frame, tmp_path / "s.nsfac")
    back = io.read_snapshot(path)
    assert (back.nx, back.ny, back.Lx, back.Ly, back.t) == (5, 3, 1.5, 0.9, 0.125)
    assert list(back.fields) == ["rho", "chi"]
    for name in frame.fields:
        assert back.fields[name].tobytes() == frame.fields[name].tobytes()


def test_snapshot_layout():
    data = io.encode_snapshot(_frame())
    assert data[:6] == b"NSFAC1"
    header = 6 + 4 * 4 + 8 * 3
    names = 2 + 3 + 2 + 3
    assert len(data) == header + names + 2 * 15 * 8
    payload = np.frombuffer(data[header + names:header + names + 15 * 8], dtype="<f8")
    assert payload.tobytes() == _frame().fields["rho"].tobytes()


def test_snapshot_bad_magic_and_truncation():
    data = io.encode_snapshot(_frame())
    with pytest.raises(FormatError, match="magic"):
        io.decode_snapshot(b"XXXXXX" + data[6:])
    with pytest.raises(FormatError):
        io.decode_snapshot(data[:-8])
    with pytest.raises(FormatError):
        io.decode_snapshot(data[:10])


def test_frame_shape_checked():
    with pytest.raises(FormatError):
        io.SnapshotFrame(4, 4, 1.0, 1.0, 0.0, {"rho": np.zeros((4, 5))})


def test_atomic_write_leaves_no_partial(tmp_path):
    io.write_text(tmp_path / "a" / "b.txt", "hello\n")
    assert (tmp_path / "a" / "b.txt").read_text() == "hello\n"
    assert not list(tmp_path.rglob("*.partial"))


def test_unwritable_target_is_format_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(FormatError):
        io.write_text(blocker / "sub" / "x.txt", "x")


def test_read_missing_snapshot(tmp_path):
    with pytest.raises(FormatError):
        io.read_snapshot(tmp_path / "none.nsfac")
