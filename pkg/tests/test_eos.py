import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsfac import eos as E
from nsfac.errors import DomainError, StateCorruptionError, UsageError

EOS = E.EosSpec()
POT = E.get_potential("double_well")
TR = E.TransportSpec()

positive = st.floats(min_value=0.1, max_value=10.0, allow_nan=False)


def test_pressure_default_unit_state():
    assert E.pressure(1.0, 1.0, EOS) == pytest.approx(7.0 / 3.0, rel=1e-15)


def test_pressure_vacuum_is_radiation_only():
    assert E.pressure(0.0, 2.0, EOS) == pytest.approx(16.0 / 3.0, rel=1e-15)


def test_pressure_term_by_term():
    rho, theta = 2.0, 3.0
    z = rho * theta ** -1.5
    direct = theta ** 2.5 * (z + z ** (5.0 / 3.0)) + theta ** 4 / 3.0
    assert E.pressure(rho, theta, EOS) == pytest.approx(direct, rel=1e-14)


def test_pressure_increasing_in_density():
    rho = np.logspace(-3, 3, 400)
    p = E.pressure(rho, 1.7, EOS)
    assert np.all(np.diff(p) > 0)


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_pressure_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        E.pressure(bad, 1.0, EOS)
    with pytest.raises(DomainError):
        E.pressure(1.0, bad, EOS)


def test_pressure_rejects_nonpositive_temperature():
    with pytest.raises(DomainError):
        E.pressure(1.0, 0.0, EOS)


@pytest.mark.parametrize("theta, expected", [(1.0, 4.0), (2.0, 20.5)])
def test_internal_energy_examples(theta, expected):
    assert E.internal_energy(1.0, theta, EOS) == pytest.approx(expected, rel=1e-15)


def test_internal_energy_closed_form():
    rho, theta = 0.3, 1.9
    closed = 1.5 * (theta + rho ** (2.0 / 3.0)) + theta ** 4 / rho
    assert E.internal_energy(rho, theta, EOS) == pytest.approx(closed, rel=1e-14)


def test_internal_energy_rejects_vacuum():
    with pytest.raises(DomainError):
        E.internal_energy(0.0, 1.0, EOS)


def test_heat_capacity_positive_and_matches_fd():
    rho, theta = np.meshgrid(np.logspace(-2, 2, 20), np.logspace(-2, 2, 20))
    cv = E.heat_capacity(rho, theta, EOS)
    assert np.all(cv > 0)
    h = 1e-4 * theta
    fd = (E.internal_energy(rho, theta + h, EOS) - E.internal_energy(rho, theta - h, EOS)) / (2 * h)
    np.testing.assert_allclose(cv, fd, rtol=1e-7)


def test_entropy_unit_state():
    assert E.entropy(1.0, 1.0, EOS) == pytest.approx(4.0 / 3.0, rel=1e-15)


def test_entropy_log_gauge_of_kernel_part():
    # the kernel part S(Z) = -ln Z shifts by exactly -1 when rho -> e rho at fixed theta
    z1, z2 = np.array(1.0), np.array(math.e)
    diff = EOS.kernel.entropy_kernel(z2) - EOS.kernel.entropy_kernel(z1)
    assert diff == pytest.approx(-1.0, abs=1e-15)


def test_entropy_density_shift_includes_radiation():
    # the radiation part 4a/3 theta^3 / rho also changes with rho
    diff = E.entropy(math.e, 1.0, EOS) - E.entropy(1.0, 1.0, EOS)
    assert diff == pytest.approx(-1.0 + 4.0 / 3.0 * (1.0 / math.e - 1.0), rel=1e-14)


def test_entropy_gauge_constant():
    shifted = E.EosSpec(S_const=2.5)
    assert E.entropy(0.7, 1.3, shifted) - E.entropy(0.7, 1.3, EOS) == pytest.approx(2.5)


@pytest.mark.parametrize("rho, theta", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_entropy_domain(rho, theta):
    with pytest.raises(DomainError):
        E.entropy(rho, theta, EOS)


def test_entropy_kernel_derivative_matches_definition():
    for name in ("default", "ideal", "polytropic"):
        k = E.get_kernel(name)
        z = np.logspace(-2, 3, 50)
        h = 1e-6 * z
        fd = (k.entropy_kernel(z + h) - k.entropy_kernel(z - h)) / (2 * h)
        exact = -1.5 * (5.0 / 3.0 * k(z) - k.derivative(z) * z) / z ** 2
        np.testing.assert_allclose(fd, exact, rtol=1e-6, atol=1e-12)


def test_kernel_values_and_zero():
    k = E.get_kernel("default")
    assert k(0.0) == 0.0
    assert k(8.0) == pytest.approx(8.0 + 32.0)
    assert k.derivative(1.0) == pytest.approx(1.0 + 5.0 / 3.0)


def test_unknown_kernel_and_potential():
    with pytest.raises(UsageError):
        E.get_kernel("vdw")
    with pytest.raises(UsageError):
        E.get_potential("obstacle")


def test_eos_spec_invariants():
    for kwargs in ({"a": 0.0}, {"p_inf": -1.0}, {"c_bound": 0.0}):
        with pytest.raises(DomainError):
            E.EosSpec(**kwargs)


# --- Gibbs consistency -------------------------------------------------------


def test_gibbs_residual_unit_state_small():
    r1, r2 = E.gibbs_residual(1.0, 1.0, EOS, h=1e-5)
    assert abs(r1) < 1e-8 and abs(r2) < 1e-8


def test_gibbs_residual_second_order():
    res = [max(abs(v) for v in E.gibbs_residual(1.0, 1.0, EOS, h=h)) for h in (1e-2, 1e-3)]
    order = math.log10(res[0] / res[1])
    assert 1.7 < order < 2.3


def test_gibbs_residual_detects_inconsistent_energy():
    def wrong(rho, theta, eos):
        return E.internal_energy(rho, theta, eos) + 0.1 * theta

    r1, _ = E.gibbs_residual(1.0, 1.0, EOS, energy=wrong)
    assert abs(r1) > 1e-2


@settings(max_examples=60, deadline=None)
@given(positive, positive)
def test_gibbs_residual_scaled_property(rho, theta):
    r1, r2 = E.gibbs_residual(rho, theta, EOS, h=1e-5, scaled=True)
    assert abs(r1) <= 1e-8 and abs(r2) <= 1e-8


# --- temperature recovery ----------------------------------------------------


@pytest.mark.parametrize("theta", [1.0, 2.0])
def test_recover_temperature_examples(theta):
    rho_e = E.energy_density(1.0, theta, EOS)
    assert E.recover_temperature(1.0, rho_e, EOS) == pytest.approx(theta, rel=1e-13)


@settings(max_examples=80, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-2, 1e2))
def test_recover_temperature_round_trip(rho, theta):
    rho_e = E.energy_density(rho, theta, EOS)
    assert E.recover_temperature(rho, rho_e, EOS) == pytest.approx(theta, rel=1e-11)


def test_recover_temperature_with_delta_shift():
    rho, theta, delta = 1.3, 0.8, 0.05
    rho_e = E.energy_density(rho, theta, EOS) + delta * rho * theta
    assert E.recover_temperature(rho, rho_e, EOS, delta=delta) == pytest.approx(theta, rel=1e-12)


def test_recover_temperature_vectorised_and_guess_independent():
    rng = np.random.default_rng(3)
    rho = rng.uniform(0.1, 10, (7, 9))
    theta = rng.uniform(0.1, 10, (7, 9))
    rho_e = E.energy_density(rho, theta, EOS)
    cold = E.recover_temperature(rho, rho_e, EOS)
    warm = E.recover_temperature(rho, rho_e, EOS, theta_guess=theta * 1.01)
    np.testing.assert_allclose(cold, theta, rtol=1e-12)
    np.testing.assert_allclose(warm, theta, rtol=1e-12)


def test_recover_temperature_below_vacuum_energy_fails():
    # the polytropic part alone carries 3/2 rho^(5/3) at theta -> 0
    with pytest.raises(StateCorruptionError) as info:
        E.recover_temperature(np.array([1.0, 1.0]), np.array([5.0, 1.0]), EOS)
    assert info.value.cell == (1,)


def test_recover_temperature_rejects_nonpositive_density():
    with pytest.raises(StateCorruptionError):
        E.recover_temperature(0.0, 1.0, EOS)


# --- potential and transport -------------------------------------------------


def test_double_well_values():
    f, df = E.potential_and_derivative(np.array([-1.0, 0.0, 1.0]))
    np.testing.assert_array_equal(df, [0.0, 0.0, 0.0])
    np.testing.assert_allclose(f, [0.0, 0.25, 0.0])


def test_transport_examples():
    mu, eta, kappa = E.transport_coefficients(1.0, 1.0, TR)
    assert (float(mu), float(eta), float(kappa)) == pytest.approx((1.1, 0.0, 3.0))
    mu, eta, kappa = E.transport_coefficients(1.0, -1.0, TR)
    assert (float(mu), float(eta), float(kappa)) == pytest.approx((1.0, 0.0, 2.0))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 100.0), st.floats(-1.0, 1.0))
def test_transport_bounds(theta, chi):
    mu, eta, kappa = E.transport_coefficients(theta, chi, TR)
    assert TR.mu_lower * (1 + theta) * (1 - 1e-12) <= mu <= TR.mu_upper * (1 + theta) * (1 + 1e-12)
    assert 0 <= eta <= TR.eta_upper * (1 + theta) + 1e-12
    lo, hi = TR.kappa_lower * (1 + theta ** 3), TR.kappa_upper * (1 + theta ** 3)
    assert lo * (1 - 1e-12) <= kappa <= hi * (1 + 1e-12)


def test_transport_invariants():
    with pytest.raises(DomainError):
        E.TransportSpec(mu_a=0.0)
    with pytest.raises(DomainError):
        E.TransportSpec(kappa_b=-0.1)


# --- hypothesis checker ------------------------------------------------------


def test_default_bundle_passes_everything():
    report = E.check_hypotheses(EOS, POT, TR)
    assert report.passed, report.to_text()


def test_default_stability_ratio_is_two_thirds():
    z = E.default_z_grid()
    assert z.size == 1000 and z[0] == pytest.approx(1e-3) and z[-1] == pytest.approx(1e6)
    np.testing.assert_allclose(EOS.kernel.stability_ratio(z), 2.0 / 3.0, rtol=0, atol=1e-12)


def test_ideal_kernel_fails_only_mr4():
    report = E.check_hypotheses(E.EosSpec(kernel=E.get_kernel("ideal")), POT, TR)
    assert report.failed_hypotheses == ["MR4"]


def test_polytropic_kernel_fails_only_mr3():
    report = E.check_hypotheses(E.EosSpec(kernel=E.get_kernel("polytropic")), POT, TR)
    assert report.failed_hypotheses == ["MR3"]
    assert not report["MR3b"].passed


def test_report_formats():
    report = E.check_hypotheses(EOS, POT, TR)
    assert "all checks pass" in report.to_text()
    assert report.to_keyvalue().splitlines()[-1] == "overall=pass"


def test_checker_rejects_bad_grid():
    with pytest.raises(UsageError):
        E.check_hypotheses(EOS, POT, TR, z_grid=[])
    with pytest.raises(UsageError):
        E.check_hypotheses(EOS, POT, TR, z_grid=[1.0, 0.5])
