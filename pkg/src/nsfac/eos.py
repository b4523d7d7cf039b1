"""Constitutive relations: pressure/energy/entropy, the Allen-Cahn potential
and the transport coefficients, together with numerical conformance checks.

The pressure has the form

    p(rho, theta) = theta**(5/2) * P(rho / theta**(3/2)) + a/3 * theta**4

and the pressure kernel ``P`` is restricted to finite power sums
``P(Z) = sum_k c_k Z**alpha_k``.  That class contains the default kernel
``Z + Z**(5/3)`` and both negative controls, and lets every derived quantity
(``e``, ``s``, the stability ratio) be written term by term without
cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import DomainError, StateCorruptionError, UsageError

FIVE_THIRDS = 5.0 / 3.0


def _as_array(x):
    return np.asarray(x, dtype=float)


def _require_finite(**arrays):
    for name, value in arrays.items():
        if not np.all(np.isfinite(value)):
            raise DomainError(f"{name} contains non-finite values")


@dataclass(frozen=True)
class PowerKernel:
    """Pressure kernel ``P(Z) = sum(c * Z**alpha for c, alpha in terms)``."""

    name: str
    terms: tuple[tuple[float, float], ...]

    def __call__(self, z):
        z = _as_array(z)
        return sum(c * _pow(z, alpha) for c, alpha in self.terms)

    def derivative(self, z):
        z = _as_array(z)
        out = np.zeros_like(z)
        for c, alpha in self.terms:
            if alpha == 0.0:
                continue
            out = out + c * alpha * _pow(z, alpha - 1.0)
        return out

    def stability_ratio(self, z):
        """``(5/3 P(Z) - P'(Z) Z) / Z``, evaluated term by term."""
        z = _as_array(z)
        out = np.zeros_like(z)
        for c, alpha in self.terms:
            weight = FIVE_THIRDS - alpha
            if weight != 0.0:
                out = out + c * weight * _pow(z, alpha - 1.0)
        return out

    def scaled(self, z):
        """``P(Z) / Z**(5/3)``."""
        z = _as_array(z)
        return sum(c * _pow(z, alpha - FIVE_THIRDS) for c, alpha in self.terms)

    def entropy_kernel(self, z):
        """Antiderivative of ``S'(Z) = -3/2 (5/3 P - P' Z) / Z**2`` with ``S`` gauge 0."""
        z = _as_array(z)
        out = np.zeros_like(z)
        for c, alpha in self.terms:
            weight = FIVE_THIRDS - alpha
            if weight == 0.0:
                continue
            if alpha == 1.0:
                out = out - 1.5 * c * weight * np.log(z)
            else:
                out = out - 1.5 * c * weight * _pow(z, alpha - 1.0) / (alpha - 1.0)
        return out

    def vacuum_limit(self):
        """``lim theta->0 theta**(5/2) P(rho theta**(-3/2)) / rho**(5/3)``.

        Only terms with ``alpha == 5/3`` survive; terms with a larger exponent
        would blow up and are rejected.
        """
        total = 0.0
        for c, alpha in self.terms:
            if alpha > FIVE_THIRDS:
                raise DomainError(f"kernel {self.name!r} is unbounded at theta -> 0")
            if alpha == FIVE_THIRDS:
                total += c
        return total

    def rational_terms(self):
        """Terms with exponents as exact fractions (for symbolic use)."""
        return [(c, Fraction(alpha).limit_denominator(1000)) for c, alpha in self.terms]


def _pow(z, alpha):
    if alpha == 1.0:
        return z
    if alpha == 0.0:
        return np.ones_like(z)
    return z ** alpha


KERNELS = {
    "default": PowerKernel("default", ((1.0, 1.0), (1.0, FIVE_THIRDS))),
    "ideal": PowerKernel("ideal", ((1.0, 1.0),)),
    "polytropic": PowerKernel("polytropic", ((1.0, FIVE_THIRDS),)),
}


def get_kernel(name):
    try:
        return KERNELS[name]
    except KeyError:
        raise UsageError(
            f"unknown pressure kernel {name!r}; choose from {sorted(KERNELS)}"
        ) from None


@dataclass(frozen=True)
class EosSpec:
    """Thermodynamic bundle.

    ``p_inf`` and ``c_bound`` are the asserted values of the high-density limit
    of ``P(Z)/Z**(5/3)`` and of the upper bound on the stability ratio; the
    hypothesis checker compares the kernel against them.
    """

    a: float = 1.0
    kernel: PowerKernel = KERNELS["default"]
    p_inf: float = 1.0
    c_bound: float = 1.0
    S_const: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("radiation constant a must be > 0")
        if not self.p_inf > 0:
            raise DomainError("p_inf must be > 0")
        if not self.c_bound > 0:
            raise DomainError("c_bound must be > 0")

    def P(self, z):
        return self.kernel(z)

    def dP(self, z):
        return self.kernel.derivative(z)


# --- thermodynamic functions -------------------------------------------------
#
# theta**(5/2) * c * (rho theta**(-3/2))**alpha == c * rho**alpha * theta**((5 - 3 alpha)/2);
# the right-hand form is used so the alpha = 5/3 term has no theta dependence at all.


def _elastic(rho, theta, kernel):
    out = 0.0
    for c, alpha in kernel.terms:
        out = out + c * _pow(rho, alpha) * _pow(theta, (5.0 - 3.0 * alpha) / 2.0)
    return out


def _elastic_dtheta(rho, theta, kernel):
    out = 0.0
    for c, alpha in kernel.terms:
        k = (5.0 - 3.0 * alpha) / 2.0
        if k != 0.0:
            out = out + c * k * _pow(rho, alpha) * _pow(theta, k - 1.0)
    return out


def pressure(rho, theta, eos: EosSpec):
    """Pressure, including the radiation part ``a/3 theta**4``."""
    rho, theta = _as_array(rho), _as_array(theta)
    _require_finite(rho=rho, theta=theta)
    if np.any(rho < 0):
        raise DomainError("density must be >= 0")
    if np.any(theta <= 0):
        raise DomainError("temperature must be > 0")
    return _elastic(rho, theta, eos.kernel) + eos.a / 3.0 * theta ** 4


def _check_positive(rho, theta):
    _require_finite(rho=rho, theta=theta)
    if np.any(rho <= 0):
        raise DomainError("density must be > 0")
    if np.any(theta <= 0):
        raise DomainError("temperature must be > 0")


def energy_density(rho, theta, eos: EosSpec):
    """``rho * e`` (finite at ``rho = 0``: the radiation energy ``a theta**4``)."""
    rho, theta = _as_array(rho), _as_array(theta)
    return 1.5 * _elastic(rho, theta, eos.kernel) + eos.a * theta ** 4


def internal_energy(rho, theta, eos: EosSpec):
    """Specific internal energy ``e(rho, theta)``."""
    rho, theta = _as_array(rho), _as_array(theta)
    _check_positive(rho, theta)
    return energy_density(rho, theta, eos) / rho


def heat_capacity(rho, theta, eos: EosSpec):
    """``d e / d theta`` at fixed density."""
    rho, theta = _as_array(rho), _as_array(theta)
    return (1.5 * _elastic_dtheta(rho, theta, eos.kernel) + 4.0 * eos.a * theta ** 3) / rho


def entropy(rho, theta, eos: EosSpec):
    """Specific entropy ``S(rho theta**(-3/2)) + 4a/3 theta**3 / rho``."""
    rho, theta = _as_array(rho), _as_array(theta)
    _check_positive(rho, theta)
    z = rho * theta ** -1.5
    return eos.kernel.entropy_kernel(z) + eos.S_const + 4.0 * eos.a / 3.0 * theta ** 3 / rho


def sound_speed(rho, theta, eos: EosSpec):
    """Estimate ``sqrt(5/3 p / rho)`` used for the acoustic time-step limit."""
    return np.sqrt(FIVE_THIRDS * pressure(rho, theta, eos) / rho)


def gibbs_residual(rho, theta, eos: EosSpec, h=1e-5, scaled=False,
                   energy=None):
    """Finite-difference residual of ``theta ds = de + p d(1/rho)``.

    Returns ``(r1, r2)`` with ``r1 = theta s_theta - e_theta`` and
    ``r2 = theta s_rho - (e_rho - p / rho**2)``.  Partials are central
    differences with step ``h * rho`` and ``h * theta`` respectively, i.e.
    ``h`` is a relative step (identical to an absolute one at unit state).
    With ``scaled=True`` each residual is divided by the magnitude of the
    terms it balances, which keeps it O(h**2) across decades of state.

    ``energy`` overrides ``internal_energy``; used to build inconsistent
    negative controls.
    """
    rho, theta = _as_array(rho), _as_array(theta)
    _check_positive(rho, theta)
    if not 0 < h < 0.5:
        raise DomainError("relative step h must lie in (0, 0.5)")
    e_fn = energy if energy is not None else internal_energy
    ht, hr = h * theta, h * rho

    def d_theta(fn):
        return (fn(rho, theta + ht, eos) - fn(rho, theta - ht, eos)) / (2 * ht)

    def d_rho(fn):
        return (fn(rho + hr, theta, eos) - fn(rho - hr, theta, eos)) / (2 * hr)

    s_t, e_t = d_theta(entropy), d_theta(e_fn)
    s_r, e_r = d_rho(entropy), d_rho(e_fn)
    p_term = pressure(rho, theta, eos) / rho ** 2
    r1 = theta * s_t - e_t
    r2 = theta * s_r - (e_r - p_term)
    if scaled:
        r1 = r1 / (np.abs(theta * s_t) + np.abs(e_t))
        r2 = r2 / (np.abs(theta * s_r) + np.abs(e_r) + np.abs(p_term))
    return r1, r2


_EPS = np.finfo(float).eps


def recover_temperature(rho, rho_e, eos: EosSpec, theta_guess=None, delta=0.0,
                        rtol=1e-12, max_iter=100):
    """Invert ``rho * (e(rho, theta) + delta * theta) = rho_e`` for ``theta > 0``.

    Safeguarded Newton iteration: a bracket ``[lo, hi]`` is maintained and any
    Newton iterate leaving it is replaced by the bisection midpoint.  Each
    cell is frozen as soon as it converges, so the result for a cell does not
    depend on which other cells are solved alongside it.
    """
    scalar = np.ndim(rho_e) == 0 and np.ndim(rho) == 0
    rho = np.array(rho, dtype=float, ndmin=1)
    target = np.array(rho_e, dtype=float, ndmin=1)
    rho, target = np.broadcast_arrays(rho, target)
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(target))):
        raise StateCorruptionError("non-finite density or energy in temperature recovery",
                                   cell=_first_bad(~(np.isfinite(rho) & np.isfinite(target))))
    if np.any(rho <= 0):
        raise StateCorruptionError("non-positive density in temperature recovery",
                                   cell=_first_bad(rho <= 0))
    floor = 1.5 * eos.kernel.vacuum_limit() * rho ** FIVE_THIRDS
    bad = target <= floor
    if np.any(bad):
        raise StateCorruptionError("energy below the zero-temperature limit; no positive root",
                                   cell=_first_bad(bad))

    kernel, a = eos.kernel, eos.a
    lo = np.zeros_like(target)
    hi = (target / a) ** 0.25
    if theta_guess is None:
        theta = hi.copy()
    else:
        theta = np.broadcast_to(np.asarray(theta_guess, dtype=float), target.shape).copy()
        outside = ~((theta > lo) & (theta < hi))
        theta[outside] = hi[outside]

    flat_shape = target.shape
    theta, lo, hi = theta.ravel(), lo.ravel(), hi.ravel()
    r, tg = rho.ravel(), target.ravel()
    active = np.arange(theta.size)
    for _ in range(max_iter):
        if active.size == 0:
            break
        th, rr = theta[active], r[active]
        g = 1.5 * _elastic(rr, th, kernel) + a * th ** 4 + delta * rr * th - tg[active]
        dg = 1.5 * _elastic_dtheta(rr, th, kernel) + 4.0 * a * th ** 3 + delta * rr
        above = g > 0
        lo_a = np.where(above, lo[active], th)
        hi_a = np.where(above, th, hi[active])
        lo[active], hi[active] = lo_a, hi_a
        new = np.where(g == 0, th, th - g / dg)
        wild = (new < lo_a) | (new > hi_a)
        new = np.where(wild, 0.5 * (lo_a + hi_a), new)
        theta[active] = new
        # a residual at rounding level of the target cannot be reduced further
        done = (np.abs(new - th) <= rtol * new) | (np.abs(g) <= 4 * _EPS * tg[active])
        active = active[~done]
    if active.size:
        raise StateCorruptionError("temperature recovery did not converge",
                                   cell=np.unravel_index(active[0], flat_shape))
    theta = theta.reshape(flat_shape)
    return float(theta[0]) if scalar else theta


def _first_bad(mask):
    idx = np.argwhere(np.atleast_1d(mask))
    return tuple(idx[0]) if idx.size else None


# --- Allen-Cahn potential ----------------------------------------------------


def _double_well(chi):
    return 0.25 * (1.0 - chi * chi) ** 2


def _double_well_derivative(chi):
    return chi * chi * chi - chi


@dataclass(frozen=True)
class PotentialSpec:
    name: str = "double_well"
    f: Callable = field(default=_double_well, compare=False)
    df: Callable = field(default=_double_well_derivative, compare=False)

    def __hash__(self):
        return hash(self.name)


POTENTIALS = {"double_well": PotentialSpec()}


def get_potential(name):
    try:
        return POTENTIALS[name]
    except KeyError:
        raise UsageError(f"unknown potential {name!r}; choose from {sorted(POTENTIALS)}") from None


def potential_and_derivative(chi, pot: PotentialSpec = POTENTIALS["double_well"]):
    chi = _as_array(chi)
    return pot.f(chi), pot.df(chi)


# --- transport ---------------------------------------------------------------


@dataclass(frozen=True)
class TransportSpec:
    """Closed-form viscosities and conductivity.

    mu(theta, chi)    = mu_a (1 + theta) + mu_b (1 + chi) / 2
    eta(theta, chi)   = eta_a (1 + theta)
    kappa(theta, chi) = kappa_a (1 + theta**3) (1 + kappa_b (1 + chi) / 2)
    """

    mu_a: float = 0.5
    mu_b: float = 0.1
    eta_a: float = 0.0
    kappa_a: float = 1.0
    kappa_b: float = 0.5

    def __post_init__(self):
        if not self.mu_a > 0:
            raise DomainError("mu_a must be > 0")
        if not self.kappa_a > 0:
            raise DomainError("kappa_a must be > 0")
        for name in ("mu_b", "eta_a", "kappa_b"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be >= 0")

    def mu(self, theta, chi):
        return self.mu_a * (1.0 + theta) + self.mu_b * (1.0 + chi) / 2.0

    def eta(self, theta, chi):
        return self.eta_a * (1.0 + theta) + 0.0 * chi

    def kappa(self, theta, chi):
        return self.kappa_a * (1.0 + theta ** 3) * (1.0 + self.kappa_b * (1.0 + chi) / 2.0)

    def mu_gradient(self, theta, chi):
        theta = _as_array(theta)
        return np.full_like(theta, self.mu_a), np.full_like(theta, self.mu_b / 2.0)

    @property
    def mu_lower(self):
        return self.mu_a

    @property
    def mu_upper(self):
        return self.mu_a + self.mu_b

    @property
    def eta_upper(self):
        return self.eta_a

    @property
    def kappa_lower(self):
        return self.kappa_a

    @property
    def kappa_upper(self):
        return self.kappa_a * (1.0 + self.kappa_b)

    @property
    def mu_gradient_bound(self):
        return self.mu_a + self.mu_b / 2.0


def transport_coefficients(theta, chi, t: TransportSpec):
    theta, chi = _as_array(theta), _as_array(chi)
    return t.mu(theta, chi), t.eta(theta, chi), t.kappa(theta, chi)


# --- hypothesis checks -------------------------------------------------------


@dataclass
class Check:
    code: str
    hypothesis: str
    description: str
    passed: bool
    detail: str = ""


@dataclass
class HypothesisReport:
    checks: list[Check]

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failed_hypotheses(self):
        return sorted({c.hypothesis for c in self.checks if not c.passed})

    def __getitem__(self, code):
        for c in self.checks:
            if c.code == code:
                return c
        raise KeyError(code)

    def to_text(self):
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"{status}  {c.code:<5} {c.description}  [{c.detail}]")
        verdict = "all checks pass" if self.passed else "failed: " + ", ".join(self.failed_hypotheses)
        lines.append(verdict)
        return "\n".join(lines)

    def to_keyvalue(self):
        lines = [f"{c.code}={'pass' if c.passed else 'fail'}" for c in self.checks]
        lines.append(f"overall={'pass' if self.passed else 'fail'}")
        return "\n".join(lines)


def default_z_grid(n=1000, z_min=1e-3, z_max=1e6):
    return np.logspace(np.log10(z_min), np.log10(z_max), n)


def check_hypotheses(eos: EosSpec, pot: PotentialSpec, t: TransportSpec, z_grid=None,
                     tail_tol=1e-3, theta_grid=None, chi_grid=None):
    """Sample the structural hypotheses on the constitutive bundle.

    ``tail_tol`` is the allowed relative deviation of ``P(Z)/Z**(5/3)`` at the
    largest sample from the asserted ``p_inf``.
    """
    z = default_z_grid() if z_grid is None else np.asarray(z_grid, dtype=float)
    if z.size == 0:
        raise UsageError("z_grid must not be empty")
    if np.any(z <= 0) or np.any(np.diff(z) <= 0):
        raise UsageError("z_grid must be positive and strictly increasing")
    kernel = eos.kernel
    checks = []

    dP = kernel.derivative(z)
    checks.append(Check("MR3a", "MR3", "P'(Z) > 0", bool(np.all(dP > 0)),
                        f"min P' = {dP.min():.6g}"))
    ratio = kernel.stability_ratio(z)
    checks.append(Check("MR3b", "MR3", "(5/3 P - P'Z)/Z > 0", bool(np.all(ratio > 0)),
                        f"ratio in [{ratio.min():.6g}, {ratio.max():.6g}]"))
    scaled = kernel.scaled(z)
    steps = np.diff(scaled)
    checks.append(Check("MR3c", "MR3", "P(Z)/Z^(5/3) non-increasing",
                        bool(np.all(steps <= 1e-14 * np.abs(scaled[:-1]))),
                        f"max increment = {steps.max():.3g}"))
    tail = scaled[-1]
    tail_err = abs(tail - eos.p_inf) / eos.p_inf
    checks.append(Check("MR4", "MR4", "P(Z)/Z^(5/3) -> p_inf", bool(tail_err <= tail_tol),
                        f"P/Z^(5/3)(Z_max) = {tail:.6g}, p_inf = {eos.p_inf:.6g}"))
    p0 = float(kernel(np.array(0.0)))
    checks.append(Check("MR5a", "MR5", "P(0) = 0", p0 == 0.0, f"P(0) = {p0:.3g}"))
    checks.append(Check("MR5b", "MR5", "(5/3 P - P'Z)/Z < c", bool(np.all(ratio < eos.c_bound)),
                        f"max ratio = {ratio.max():.6g}, c = {eos.c_bound:.6g}"))

    th = np.logspace(-3, 3, 61) if theta_grid is None else np.asarray(theta_grid, dtype=float)
    ch = np.linspace(-1.0, 1.0, 41) if chi_grid is None else np.asarray(chi_grid, dtype=float)
    TH, CH = np.meshgrid(th, ch, indexing="ij")
    mu, eta, kappa = transport_coefficients(TH, CH, t)
    rel = 1e-12
    mu_ok = bool(np.all(mu >= t.mu_lower * (1 + TH) * (1 - rel))
                 and np.all(mu <= t.mu_upper * (1 + TH) * (1 + rel)))
    gt, gc = t.mu_gradient(TH, CH)
    grad_ok = bool(np.all(np.hypot(gt, gc) <= t.mu_gradient_bound * (1 + rel)))
    checks.append(Check("MR6", "MR6", "mu_lo(1+theta) <= mu <= mu_hi(1+theta), |grad mu| bounded",
                        mu_ok and grad_ok, f"mu_lo = {t.mu_lower}, mu_hi = {t.mu_upper}"))
    eta_ok = bool(np.all(eta >= 0) and np.all(eta <= t.eta_upper * (1 + TH) * (1 + rel)))
    checks.append(Check("MR7", "MR7", "0 <= eta <= eta_hi(1+theta)", eta_ok,
                        f"eta_hi = {t.eta_upper}"))
    k_ok = bool(np.all(kappa >= t.kappa_lower * (1 + TH ** 3) * (1 - rel))
                and np.all(kappa <= t.kappa_upper * (1 + TH ** 3) * (1 + rel)))
    checks.append(Check("MR9", "MR9", "k_lo(1+theta^3) <= kappa <= k_hi(1+theta^3)", k_ok,
                        f"k_lo = {t.kappa_lower}, k_hi = {t.kappa_upper}"))
    _, df = potential_and_derivative(np.array([1.0, -1.0]), pot)
    checks.append(Check("MR10", "MR10", "df(+1) = df(-1) = 0", bool(np.all(df == 0.0)),
                        f"df(+1) = {df[0]:.3g}, df(-1) = {df[1]:.3g}"))
    return HypothesisReport(checks)
