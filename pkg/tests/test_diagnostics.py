import math

import numpy as np
import pytest

from nsfac import diagnostics as D
from nsfac import initial
from nsfac.errors import DomainError
from nsfac.grid import GridSpec
from nsfac.solver import Model, RegularizationParams, StepControl, step

MODEL = Model()
G1 = GridSpec(8, 8)


def _uniform(**kw):
    return initial.uniform(G1, MODEL, **kw)


def test_total_energy_unit_state():
    assert D.total_energy(_uniform(), G1, MODEL) == pytest.approx(4.0, rel=1e-15)


def test_total_energy_kinetic_isolation():
    base = D.total_energy(_uniform(), G1, MODEL)
    moving = D.total_energy(_uniform(u0=(2.0, 0.0)), G1, MODEL)
    assert moving - base == pytest.approx(2.0, rel=1e-14)


def test_total_energy_potential_isolation():
    base = D.total_energy(_uniform(), G1, MODEL)
    assert D.total_energy(_uniform(chi0=0.0), G1, MODEL) - base == pytest.approx(0.25, rel=1e-14)


def test_total_energy_removes_delta_shift():
    model = MODEL.replace(reg=RegularizationParams(delta=0.1))
    st = initial.uniform(G1, model)
    assert D.total_energy(st, G1, model) == pytest.approx(4.0, rel=1e-14)


def test_total_entropy_unit_state():
    assert D.total_entropy(_uniform(), G1, MODEL) == pytest.approx(4.0 / 3.0, rel=1e-15)


def test_ballistic_energy_unit_state():
    assert D.ballistic_energy(_uniform(), G1, MODEL, 1.0) == pytest.approx(8.0 / 3.0, rel=1e-14)


def test_ballistic_energy_small_reference_temperature_limit():
    st = _uniform(chi0=0.3)
    e = D.total_energy(st, G1, MODEL)
    assert D.ballistic_energy(st, G1, MODEL, 1e-12) == pytest.approx(e, rel=1e-11)
    with pytest.raises(DomainError):
        D.ballistic_energy(st, G1, MODEL, 0.0)


def test_production_vanishes_at_rest():
    field, total = D.entropy_production(_uniform(), G1, MODEL)
    assert np.all(field == 0.0) and total == 0.0


def test_production_from_temperature_gradient_is_conductive():
    g = GridSpec(32, 32)
    X, _ = g.centers()
    theta = 1.0 + 0.3 * np.cos(np.pi * X)
    st = initial.from_primitives(np.ones(g.shape), np.zeros((2,) + g.shape), theta,
                                 np.ones(g.shape), MODEL)
    field, total = D.entropy_production(st, g, MODEL)
    assert total > 0 and np.all(field >= 0)
    kappa = MODEL.transport.kappa(theta, 1.0)
    dtheta = -0.3 * np.pi * np.sin(np.pi * X)
    exact = float(np.mean(kappa * dtheta ** 2 / theta ** 2))
    assert total == pytest.approx(exact, rel=5e-3)


def test_production_nonnegative_on_random_states():
    rng = np.random.default_rng(7)
    g = GridSpec(16, 16)
    for _ in range(5):
        rho = rng.uniform(0.2, 3.0, g.shape)
        theta = rng.uniform(0.2, 3.0, g.shape)
        u = rng.uniform(-1, 1, (2,) + g.shape)
        chi = rng.uniform(-1, 1, g.shape)
        st = initial.from_primitives(rho, u, theta, chi, MODEL)
        field, _ = D.entropy_production(st, g, MODEL)
        assert field.min() >= -1e-14


def test_gn_monitor_constant_is_zero():
    assert D.gn_monitor(np.full(G1.shape, 0.4), G1) == 0.0


def test_gn_monitor_finite_for_smooth_field():
    g = GridSpec(32, 32)
    X, Y = g.centers()
    ratio = D.gn_monitor(np.cos(np.pi * X) * np.cos(np.pi * Y), g)
    assert 0 < ratio < 10


def test_density_norm_of_constant():
    g = GridSpec(8, 8, Lx=2.0, Ly=1.5)
    st = initial.uniform(g, MODEL, rho0=3.0)
    norms = D.apriori_norms(st, g, MODEL)
    assert norms.rho_L53 == pytest.approx(3.0 * 3.0 ** 0.6, rel=1e-14)
    assert norms.theta_L4 == pytest.approx(3.0 ** 0.25, rel=1e-14)
    assert norms.m_L54 == 0.0 and norms.gn_ratio == 0.0
    assert norms.chi_W12 == pytest.approx(math.sqrt(3.0), rel=1e-14)


def test_maximum_principle_pass_and_fail():
    ok = D.check_maximum_principle(np.full((4, 4), 0.5))
    assert ok.passed and ok.min_chi == ok.max_chi == 0.5
    chi = np.zeros((4, 5))
    chi[2, 3] = 1 + 1e-3
    bad = D.check_maximum_principle(chi, tol=1e-6)
    assert not bad.passed and bad.argmax == (2, 3) and bad.max_chi == 1 + 1e-3
    assert D.check_maximum_principle(chi, tol=1e-2).passed


def test_series_records_and_increments():
    g = GridSpec(16, 16)
    st = initial.bubble(g, MODEL)
    series = D.DiagnosticsSeries(theta_bar=1.0)
    first = series.record(0, 0.0, 0.0, st, g, MODEL)
    assert first.u_W12_sq_increment == 0.0 and first.cumulative_production == 0.0
    norms0 = D.apriori_norms(st, g, MODEL)
    t, ctl = 0.0, StepControl(t_end=1.0)
    for _ in range(3):
        st, dt, _ = step(st, g, MODEL, t, ctl)
        t += dt
    rec = series.record(3, t, dt, st, g, MODEL)
    assert rec.lap_chi_sq_increment == pytest.approx(norms0.lap_chi_sq_rate * t, rel=1e-14)
    assert len(series) == 2 and np.array_equal(series.column("step"), [0, 3])
    assert rec.ballistic_energy == pytest.approx(rec.total_energy - rec.total_entropy, rel=1e-14)
    assert set(D.CSV_FIELDS) <= set(rec.to_dict())
    assert len(rec.csv_row()) == len(D.CSV_FIELDS)


def test_csv_schema_order():
    assert D.CSV_FIELDS == (
        "step", "t", "dt", "mass", "total_energy", "total_entropy", "entropy_production",
        "ballistic_energy", "min_rho", "min_theta", "min_chi", "max_chi", "norm_rho_L53",
        "norm_theta_L4", "norm_m_L54", "norm_chi_W12", "gn_ratio")
