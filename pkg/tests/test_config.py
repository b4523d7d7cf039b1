import math

import pytest

from nsfac.app.config import RunConfig, load_config, parse_config, serialize_config
from nsfac.errors import ConfigError, FormatError

MINIMAL = "nx = 16\nny = 8\nt_end = 0.1\n"


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert (cfg.nx, cfg.ny, cfg.t_end) == (16, 8, 0.1)
    assert cfg.cfl == 0.4 and cfg.epsilon == 0.0 and cfg.delta == 0.0
    assert cfg.a == 1.0 and cfg.theta_bar == 1.0 and cfg.Gamma == 4.0
    assert cfg.dt_max == math.inf and cfg.initial == "bubble" and cfg.workers == 1


def test_comments_and_blank_lines():
    cfg = parse_config("# smoke\n\nnx = 8   # cells\nny=8\n  t_end = 1e-2\ncfl = 0.2\n")
    assert cfg.cfl == 0.2 and cfg.t_end == 0.01


def test_builders():
    cfg = parse_config(MINIMAL + "delta = 0.01\nepsilon = 1e-4\nkernel = ideal\nmu_a = 0.7\n")
    assert cfg.grid().shape == (8, 16)
    m = cfg.model(workers=3)
    assert m.workers == 3 and m.reg.delta == 0.01 and m.transport.mu_a == 0.7
    assert m.eos.kernel.name == "ideal"
    st = cfg.initial_state(m)
    assert st.rho.shape == (8, 16) and st.theta is not None


def test_negative_epsilon_is_range_error_on_its_line():
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL + "epsilon = -1\n")
    assert info.value.line == 4
    assert "line 4" in str(info.value) and "epsilon" in str(info.value)


@pytest.mark.parametrize("text, line", [
    (MINIMAL + "viscosity = 2\n", 4),
    ("nx = 16\nnx = 32\nny = 8\nt_end = 1\n", 2),
    ("nx = sixteen\nny = 8\nt_end = 1\n", 1),
    ("nx = 16\nny 8\nt_end = 1\n", 2),
    (MINIMAL + "cfl = 1.5\n", 4),
    (MINIMAL + "kernel = vdw\n", 4),
    (MINIMAL + "t_end = nan\n", 4),
])
def test_errors_name_the_line(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line


def test_missing_required_key():
    with pytest.raises(ConfigError, match="t_end"):
        parse_config("nx = 8\nny = 8\n")


def test_t_end_must_be_positive():
    with pytest.raises(ConfigError):
        parse_config("nx = 8\nny = 8\nt_end = 0\n")


def test_round_trip_is_identical():
    cfg = parse_config(MINIMAL + "delta = 0.1\ndt_max = 0.003\nLx = 0.3\noutput_dir = out/x\n"
                                 "max_steps = 5\ninitial = shear\n")
    text = serialize_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert serialize_config(again) == text
    assert parse_config(serialize_config(parse_config(MINIMAL))) == parse_config(MINIMAL)


def test_direct_construction_validates():
    with pytest.raises(ConfigError):
        RunConfig(nx=8, ny=8, t_end=1.0, chi0=2.0)


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(MINIMAL)
    assert load_config(path).nx == 16
    with pytest.raises(FormatError):
        load_config(tmp_path / "missing.cfg")
