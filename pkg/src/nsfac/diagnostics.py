"""Scalar functionals monitored during a run.

Conserved quantities, entropy and its production, the ballistic energy, the
norms controlled by the a priori estimates and the order-parameter bounds.
All reductions go through ``grid.total`` (correctly rounded), so every value
is independent of the worker count.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import eos as _eos
from .errors import DomainError
from .grid import (
    BcKind,
    GridSpec,
    dirichlet_energy,
    gradient,
    integrate,
    laplacian,
    lp_norm,
)
from .solver import Model, State, entropy_production_field, physical_energy_density, \
    recover_state_temperature

CSV_FIELDS = (
    "step", "t", "dt", "mass", "total_energy", "total_entropy", "entropy_production",
    "ballistic_energy", "min_rho", "min_theta", "min_chi", "max_chi", "norm_rho_L53",
    "norm_theta_L4", "norm_m_L54", "norm_chi_W12", "gn_ratio",
)


def _theta(state: State, model: Model, theta):
    if theta is not None:
        return theta
    if state.theta is not None:
        return state.theta
    return recover_state_temperature(state, model)


# --- conserved and thermodynamic functionals --------------------------------


def mass(state: State, g: GridSpec):
    return integrate(state.rho, g)


def kinetic_energy(state: State, g: GridSpec):
    m = state.mom
    return integrate(0.5 * (m[0] * m[0] + m[1] * m[1]) / state.rho, g)


def interfacial_energy(chi, g: GridSpec, model: Model):
    """``int 1/2 |grad chi|^2 + f(chi)``."""
    return dirichlet_energy(chi, g) + integrate(model.potential.f(chi), g)


def total_energy(state: State, g: GridSpec, model: Model, theta=None):
    """``int 1/2 rho |u|^2 + 1/2 |grad chi|^2 + rho e + f(chi)``.

    ``rho e`` is the physical internal energy; with ``delta > 0`` the
    ``delta rho theta`` part of the energy unknown is removed first.
    """
    rho_e = state.rho_e
    if model.reg.delta > 0:
        rho_e = physical_energy_density(state, _theta(state, model, theta), model)
    return kinetic_energy(state, g) + integrate(rho_e, g) + interfacial_energy(state.chi, g, model)


def total_entropy(state: State, g: GridSpec, model: Model, theta=None):
    theta = _theta(state, model, theta)
    return integrate(state.rho * _eos.entropy(state.rho, theta, model.eos), g)


def entropy_production(state: State, g: GridSpec, model: Model, theta=None):
    """Pointwise production field and its integral.

    The field is assembled from the solver's own face and cell operators, so
    the viscous, interfacial and conduction contributions are each a
    non-negative quadratic form on the discrete level.
    """
    theta = _theta(state, model, theta)
    prod = entropy_production_field(state, theta, g, model)
    return prod, integrate(prod, g)


def ballistic_energy(state: State, g: GridSpec, model: Model, theta_bar=1.0, theta=None):
    """``E - theta_bar int rho s``."""
    if not theta_bar > 0:
        raise DomainError("theta_bar must be > 0")
    theta = _theta(state, model, theta)
    return total_energy(state, g, model, theta) - theta_bar * total_entropy(state, g, model, theta)


# --- a priori norms ----------------------------------------------------------


def _w12_squared(s, bc, g):
    gr = gradient(s, bc, g)
    return integrate(s * s, g) + integrate(gr[0] ** 2 + gr[1] ** 2, g)


def gn_monitor(chi, g: GridSpec):
    """``||grad chi||_{L4}^2 / (||chi||_inf ||Delta chi||_{L2})``; ``0 / 0`` is reported as 0."""
    gr = gradient(chi, BcKind.NEUMANN, g)
    num = math.sqrt(integrate((gr[0] ** 2 + gr[1] ** 2) ** 2, g))
    den = lp_norm(chi, g, np.inf) * lp_norm(laplacian(chi, BcKind.NEUMANN, g), g, 2)
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


@dataclass(frozen=True)
class NormBlock:
    """Instantaneous norms; the ``*_rate`` entries are integrands of the time-integrated bounds."""

    rho_L53: float
    theta_L4: float
    m_L54: float
    chi_W12: float
    u_W12_sq_rate: float
    theta32_W12_sq_rate: float
    grad_log_theta_sq_rate: float
    lap_chi_sq_rate: float
    gn_ratio: float


def apriori_norms(state: State, g: GridSpec, model: Optional[Model] = None, theta=None):
    theta = _theta(state, model or Model(), theta)
    u = state.velocity
    m_abs = np.hypot(state.mom[0], state.mom[1])
    chi_w12 = math.sqrt(_w12_squared(state.chi, BcKind.NEUMANN, g))
    u_sq = _w12_squared(u[0], BcKind.NOSLIP, g) + _w12_squared(u[1], BcKind.NOSLIP, g)
    t32 = _w12_squared(theta ** 1.5, BcKind.NEUMANN, g)
    glog = gradient(np.log(theta), BcKind.NEUMANN, g)
    lap = laplacian(state.chi, BcKind.NEUMANN, g)
    return NormBlock(
        rho_L53=lp_norm(state.rho, g, 5.0 / 3.0),
        theta_L4=lp_norm(theta, g, 4.0),
        m_L54=lp_norm(m_abs, g, 5.0 / 4.0),
        chi_W12=chi_w12,
        u_W12_sq_rate=u_sq,
        theta32_W12_sq_rate=t32,
        grad_log_theta_sq_rate=integrate(glog[0] ** 2 + glog[1] ** 2, g),
        lap_chi_sq_rate=integrate(lap * lap, g),
        gn_ratio=gn_monitor(state.chi, g),
    )


# --- order-parameter bounds --------------------------------------------------


@dataclass(frozen=True)
class MaxPrincipleResult:
    passed: bool
    min_chi: float
    max_chi: float
    argmin: tuple
    argmax: tuple


def check_maximum_principle(chi, tol=1e-6):
    """Pass iff ``-1 - tol <= min chi`` and ``max chi <= 1 + tol``; extrema are located."""
    chi = np.asarray(chi, dtype=float)
    jmin = np.unravel_index(np.argmin(chi), chi.shape)
    jmax = np.unravel_index(np.argmax(chi), chi.shape)
    lo, hi = float(chi[jmin]), float(chi[jmax])
    passed = bool(lo >= -1.0 - tol and hi <= 1.0 + tol)
    return MaxPrincipleResult(passed, lo, hi, tuple(int(k) for k in jmin),
                              tuple(int(k) for k in jmax))


# --- per-step record ---------------------------------------------------------


@dataclass
class DiagnosticsRecord:
    step: int
    t: float
    dt: float
    mass: float
    total_energy: float
    total_entropy: float
    entropy_production: float
    ballistic_energy: float
    min_rho: float
    max_rho: float
    min_theta: float
    max_theta: float
    min_chi: float
    max_chi: float
    norm_rho_L53: float
    norm_theta_L4: float
    norm_m_L54: float
    norm_chi_W12: float
    gn_ratio: float
    u_W12_sq_increment: float = 0.0
    theta32_W12_sq_increment: float = 0.0
    grad_log_theta_sq_increment: float = 0.0
    lap_chi_sq_increment: float = 0.0
    min_production: float = 0.0
    cumulative_production: float = 0.0
    """``sum(production * dt)`` over all steps so far (time-weighted per step)."""

    def csv_row(self):
        return [getattr(self, k) for k in CSV_FIELDS]

    def to_dict(self):
        return asdict(self)


_INCREMENTS = (
    ("u_W12_sq_increment", "u_W12_sq_rate"),
    ("theta32_W12_sq_increment", "theta32_W12_sq_rate"),
    ("grad_log_theta_sq_increment", "grad_log_theta_sq_rate"),
    ("lap_chi_sq_increment", "lap_chi_sq_rate"),
)


@dataclass
class DiagnosticsSeries:
    """Diagnostic records in time order, with left-endpoint accumulation of the increments."""

    theta_bar: float = 1.0
    records: list = field(default_factory=list)
    _last_norms: Optional[NormBlock] = field(default=None, repr=False)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, k):
        return self.records[k]

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def record(self, step, t, dt, state: State, g: GridSpec, model: Model,
               cumulative_production=0.0, theta=None):
        theta = _theta(state, model, theta)
        norm_block = apriori_norms(state, g, model, theta)
        prod_field, prod = entropy_production(state, g, model, theta)
        energy = total_energy(state, g, model, theta)
        entropy = total_entropy(state, g, model, theta)
        increments = {}
        prev = self.records[-1] if self.records else None
        for inc, rate in _INCREMENTS:
            value = 0.0
            if prev is not None:
                value = getattr(prev, inc) + getattr(self._last_norms, rate) * (t - prev.t)
            increments[inc] = value
        rec = DiagnosticsRecord(
            step=int(step), t=float(t), dt=float(dt), mass=mass(state, g),
            total_energy=energy, total_entropy=entropy, entropy_production=prod,
            ballistic_energy=energy - self.theta_bar * entropy,
            min_rho=float(state.rho.min()), max_rho=float(state.rho.max()),
            min_theta=float(theta.min()), max_theta=float(theta.max()),
            min_chi=float(state.chi.min()), max_chi=float(state.chi.max()),
            norm_rho_L53=norm_block.rho_L53, norm_theta_L4=norm_block.theta_L4,
            norm_m_L54=norm_block.m_L54, norm_chi_W12=norm_block.chi_W12,
            gn_ratio=norm_block.gn_ratio, min_production=float(prod_field.min()),
            cumulative_production=float(cumulative_production),
            **increments,
        )
        self.records.append(rec)
        self._last_norms = norm_block
        return rec


def record_fields():
    return [f.name for f in fields(DiagnosticsRecord)]
