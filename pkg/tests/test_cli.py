import subprocess
import sys

import numpy as np
import pytest

from nsfac.app import io
from nsfac.app.cli import _workers, build_parser, main
from nsfac.diagnostics import CSV_FIELDS
from nsfac.errors import UsageError

SMOKE = "nx = 12\nny = 12\nt_end = 0.002\ndiag_every = 2\n"


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "smoke.cfg"
    path.write_text(SMOKE)
    return path


def test_check_eos_default_passes(capsys):
    assert main(["check-eos"]) == 0
    assert "all checks pass" in capsys.readouterr().out


def test_check_eos_ideal_names_mr4(capsys, tmp_path):
    assert main(["check-eos", "--kernel", "ideal", "--format", "kv", "--out", str(tmp_path)]) == 1
    out = capsys.readouterr().out
    assert "MR4" in out and "overall=fail" in out
    assert (tmp_path / "check_eos_ideal.txt").read_text().strip().endswith("overall=fail")


def test_check_eos_polytropic_fails(capsys):
    assert main(["check-eos", "--kernel", "polytropic"]) == 1
    assert "MR3" in capsys.readouterr().out


def test_run_writes_schema_and_monotone_time(config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out)]) == 0
    assert "steps=" in capsys.readouterr().out
    header = (out / "diagnostics.csv").read_text().splitlines()[0]
    assert header == ",".join(CSV_FIELDS)
    cols = io.read_diagnostics_csv(out / "diagnostics.csv")
    assert np.all(np.diff(cols["t"]) >= 0) and cols["t"][-1] == 0.002
    assert (out / "final.nsfac").exists() and (out / "config.txt").exists()
    assert not list(out.glob("*.partial"))


def test_workers_do_not_change_output(config, tmp_path, monkeypatch):
    monkeypatch.setenv("NSFAC_WORKERS", "3")
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "env")]) == 0
    monkeypatch.delenv("NSFAC_WORKERS")
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "one")]) == 0
    a = (tmp_path / "env" / "diagnostics.csv").read_bytes()
    assert a == (tmp_path / "one" / "diagnostics.csv").read_bytes()


def test_worker_precedence(monkeypatch):
    parser = build_parser()
    monkeypatch.setenv("NSFAC_WORKERS", "5")
    assert _workers(parser.parse_args(["run", "--config", "x"])) == 5
    assert _workers(parser.parse_args(["run", "--config", "x", "--workers", "2"])) == 2
    monkeypatch.setenv("NSFAC_WORKERS", "zero")
    with pytest.raises(UsageError):
        _workers(parser.parse_args(["run", "--config", "x"]))
    monkeypatch.setenv("NSFAC_WORKERS", "0")
    with pytest.raises(UsageError):
        _workers(parser.parse_args(["run", "--config", "x"]))


def test_bad_config_exits_2_with_line(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text(SMOKE + "epsilon = -1\n")
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "line 5" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_missing_config_exits_4(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 4
    assert "cannot read" in capsys.readouterr().err


def test_unwritable_output_exits_4(config, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["run", "--config", str(config), "--out", str(blocker / "sub")]) == 4


def test_mms_rejects_too_few_levels():
    assert main(["mms", "--levels", "2"]) == 2


def test_mms_small_study(tmp_path, capsys):
    code = main(["mms", "--diffusion-only", "--n0", "8", "--t-final", "0.002", "--out", str(tmp_path)])
    assert code == 0
    csv = (tmp_path / "mms_diffusion.csv").read_text().splitlines()
    assert len(csv) == 4 and csv[0].startswith("nx,")


def test_sweep_small(tmp_path, config, capsys):
    assert main(["sweep", "--param", "delta", "--values", "1e-2", "1e-3", "--config",
                 str(config), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep_delta.csv").read_text().splitlines()
    assert lines[0] == "value,epsilon,delta,dist_rho,dist_chi,distance" and len(lines) == 3


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nsfac.app.cli", "check-eos", "--format", "kv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.strip().endswith("overall=pass")


def test_usage_error_from_argparse():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
