"""Semi-discrete right-hand sides and the SSP-RK2 time stepper.

Spatial discretisation (method of lines on the cell-centred grid):

* convective fluxes ``q u`` of every conserved quantity use a Rusanov flux
  whose dissipation speed is the local advective speed ``max(|u_L|, |u_R|)``;
  the wall faces carry exactly zero convective flux;
* the pressure gradient is a central difference with linearly extrapolated
  ghosts;
* viscous stress, Korteweg stress and heat flux are evaluated on cell faces
  (compact normal differences, averaged tangential differences) and
  differenced back to the cells;
* the order parameter is advected with first-order upwinding and diffused
  with the compact Neumann Laplacian.

The regularised system (artificial viscosity ``epsilon``, artificial
pressure/viscosity/conductivity ``delta``) re-uses the same assembly; every
regularising term is skipped when its parameter is zero, so the base model is
reproduced bit for bit.  With ``delta > 0`` the energy unknown is
``rho (e + delta theta)``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import _kernels
from . import eos as _eos
from .eos import EosSpec, PotentialSpec, TransportSpec
from .errors import StateCorruptionError, UsageError
from .grid import (
    BcKind,
    GridSpec,
    ddx_padded,
    ddy_padded,
    face_divergence,
    laplacian_padded,
    map_rows,
    pad,
    run_row_blocks,
    xface_average,
    xface_normal,
    xface_tangential,
    yface_average,
    yface_normal,
    yface_tangential,
)


@dataclass
class State:
    """Conserved unknowns; ``theta`` caches the recovered temperature."""

    rho: np.ndarray
    mom: np.ndarray
    rho_e: np.ndarray
    chi: np.ndarray
    theta: Optional[np.ndarray] = None

    @property
    def velocity(self):
        return self.mom / self.rho

    def copy(self):
        return State(self.rho.copy(), self.mom.copy(), self.rho_e.copy(), self.chi.copy(),
                     None if self.theta is None else self.theta.copy())

    def fields(self):
        """Named fields in snapshot order."""
        out = {"rho": self.rho, "mom_x": self.mom[0], "mom_y": self.mom[1],
               "rho_e": self.rho_e, "chi": self.chi}
        if self.theta is not None:
            out["theta"] = self.theta
        return out


@dataclass(frozen=True)
class RegularizationParams:
    epsilon: float = 0.0
    delta: float = 0.0
    Gamma: float = 4.0

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise UsageError("epsilon must be >= 0")
        if not self.delta >= 0:
            raise UsageError("delta must be >= 0")
        if not self.Gamma >= 4:
            raise UsageError("Gamma must be >= 4")

    @property
    def active(self):
        return self.epsilon > 0 or self.delta > 0


@dataclass(frozen=True)
class StepControl:
    t_end: float
    cfl: float = 0.4
    dt_max: float = math.inf
    diffusive_safety: float = 0.25

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise UsageError("cfl must lie in (0, 1]")
        if not self.t_end >= 0:
            raise UsageError("t_end must be >= 0")
        if not self.dt_max > 0:
            raise UsageError("dt_max must be > 0")


Forcing = Callable[[float], tuple]


@dataclass(frozen=True)
class Model:
    """Everything the right-hand side needs besides the state and the grid.

    ``forcing(t)`` may return additive sources ``(s_rho, s_mom, s_rho_e, s_chi)``
    (used by the manufactured-solution harness).
    """

    eos: EosSpec = field(default_factory=EosSpec)
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    transport: TransportSpec = field(default_factory=TransportSpec)
    reg: RegularizationParams = field(default_factory=RegularizationParams)
    rho_floor: float = 1e-10
    chi_tol: float = 1e-6
    workers: int = 1
    forcing: Optional[Forcing] = None
    compiled: bool = True

    @property
    def uses_kernels(self):
        """Whether the compiled stencil kernels handle this model."""
        return self.compiled and self.potential.name == "double_well"

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


class Rates(NamedTuple):
    rho: np.ndarray
    mom: np.ndarray
    rho_e: np.ndarray
    chi: np.ndarray


# --- pointwise constitutive tensors -----------------------------------------


def viscous_stress(grad_u, theta, chi, t: TransportSpec, delta=0.0):
    """Newtonian stress ``mu (D - div u / 2 I) + eta div u I`` for ``d = 2``.

    ``grad_u[a, b] = d u_a / d x_b``; shear viscosity is ``mu + delta theta``.
    """
    mu = t.mu(theta, chi)
    if delta > 0:
        mu = mu + delta * theta
    eta = t.eta(theta, chi)
    div = grad_u[0, 0] + grad_u[1, 1]
    off = 0.5 * (grad_u[0, 1] + grad_u[1, 0])
    dev = 0.5 * (grad_u[0, 0] - grad_u[1, 1])
    s_xx = mu * dev + eta * div
    s_yy = -mu * dev + eta * div
    s_xy = mu * off
    return np.array([[s_xx, s_xy], [s_xy, s_yy]])


def capillary_stress(grad_chi):
    """Korteweg tensor ``grad chi (x) grad chi - |grad chi|^2 / 2 I`` (traceless in 2D)."""
    gx, gy = grad_chi[0], grad_chi[1]
    half = 0.5 * (gx * gx - gy * gy)
    cross = gx * gy
    return np.array([[half, cross], [cross, -half]])


def conductivity(theta, chi, t: TransportSpec, reg: Optional[RegularizationParams] = None):
    kappa = t.kappa(theta, chi)
    if reg is not None and reg.delta > 0:
        kappa = kappa + reg.delta * (theta ** reg.Gamma + 1.0 / theta)
    return kappa


def heat_flux(grad_theta, theta, chi, t: TransportSpec, reg=None):
    """Fourier law ``q = -kappa grad theta``."""
    return -conductivity(theta, chi, t, reg) * np.asarray(grad_theta)


def double_contraction(A, B):
    return A[0, 0] * B[0, 0] + A[0, 1] * B[0, 1] + A[1, 0] * B[1, 0] + A[1, 1] * B[1, 1]


# --- shared discrete quantities ---------------------------------------------


class Discretization:
    """Lazily evaluated intermediates of one right-hand-side evaluation."""

    def __init__(self, state: State, theta, g: GridSpec, model: Model):
        self.state = state
        self.theta = theta
        self.g = g
        self.model = model
        self.dx, self.dy = g.dx, g.dy

    # padded primitives
    @cached_property
    def u(self):
        return self.state.mom / self.state.rho

    @cached_property
    def ux_p(self):
        return pad(self.u[0], BcKind.NOSLIP)

    @cached_property
    def uy_p(self):
        return pad(self.u[1], BcKind.NOSLIP)

    @cached_property
    def theta_p(self):
        return pad(self.theta, BcKind.NEUMANN)

    @cached_property
    def chi_p(self):
        return pad(self.state.chi, BcKind.NEUMANN)

    @cached_property
    def rho_p(self):
        return pad(self.state.rho, BcKind.NEUMANN)

    # thermodynamics
    @cached_property
    def pressure(self):
        return _eos.pressure(self.state.rho, self.theta, self.model.eos)

    @cached_property
    def total_pressure(self):
        p = self.pressure
        reg = self.model.reg
        if reg.delta > 0:
            rho = self.state.rho
            p = p + reg.delta * (rho ** reg.Gamma + rho * rho)
        return p

    # convective machinery
    @cached_property
    def speeds(self):
        ux, uy = self.u
        lam_x = np.maximum(np.abs(ux[:, :-1]), np.abs(ux[:, 1:]))
        lam_y = np.maximum(np.abs(uy[:-1, :]), np.abs(uy[1:, :]))
        return lam_x, lam_y

    def convective_rate(self, q):
        """``-div(q u)`` with Rusanov fluxes and zero flux through the walls."""
        ux, uy = self.u
        lam_x, lam_y = self.speeds
        ny, nx = self.g.shape
        qux, quy = q * ux, q * uy
        fx = np.zeros((ny, nx + 1))
        fy = np.zeros((ny + 1, nx))
        fx[:, 1:-1] = 0.5 * (qux[:, :-1] + qux[:, 1:]) - 0.5 * lam_x * (q[:, 1:] - q[:, :-1])
        fy[1:-1, :] = 0.5 * (quy[:-1, :] + quy[1:, :]) - 0.5 * lam_y * (q[1:, :] - q[:-1, :])
        return -face_divergence(fx, fy, self.dx, self.dy)

    # velocity gradients
    @cached_property
    def grad_u(self):
        """Cell-centred ``d u_a / d x_b``."""
        return np.array([
            [ddx_padded(self.ux_p, self.dx), ddy_padded(self.ux_p, self.dy)],
            [ddx_padded(self.uy_p, self.dx), ddy_padded(self.uy_p, self.dy)],
        ])

    @cached_property
    def div_u(self):
        return self.grad_u[0, 0] + self.grad_u[1, 1]

    @cached_property
    def xface_grad_u(self):
        return np.array([
            [xface_normal(self.ux_p, self.dx), xface_tangential(self.ux_p, self.dy)],
            [xface_normal(self.uy_p, self.dx), xface_tangential(self.uy_p, self.dy)],
        ])

    @cached_property
    def yface_grad_u(self):
        return np.array([
            [yface_tangential(self.ux_p, self.dx), yface_normal(self.ux_p, self.dy)],
            [yface_tangential(self.uy_p, self.dx), yface_normal(self.uy_p, self.dy)],
        ])

    @cached_property
    def xface_theta(self):
        return xface_average(self.theta_p)

    @cached_property
    def yface_theta(self):
        return yface_average(self.theta_p)

    @cached_property
    def xface_chi(self):
        return xface_average(self.chi_p)

    @cached_property
    def yface_chi(self):
        return yface_average(self.chi_p)

    @cached_property
    def viscous_divergence(self):
        t, delta = self.model.transport, self.model.reg.delta
        sx = viscous_stress(self.xface_grad_u, self.xface_theta, self.xface_chi, t, delta)
        sy = viscous_stress(self.yface_grad_u, self.yface_theta, self.yface_chi, t, delta)
        return np.stack([
            face_divergence(sx[0, 0], sy[0, 1], self.dx, self.dy),
            face_divergence(sx[1, 0], sy[1, 1], self.dx, self.dy),
        ])

    @cached_property
    def cell_stress(self):
        return viscous_stress(self.grad_u, self.theta, self.state.chi, self.model.transport,
                              self.model.reg.delta)

    @cached_property
    def viscous_heating(self):
        return double_contraction(self.cell_stress, self.grad_u)

    # order parameter
    @cached_property
    def laplacian_chi(self):
        return laplacian_padded(self.chi_p, self.dx, self.dy)

    @cached_property
    def chemical_potential(self):
        """``Delta chi - f'(chi)``."""
        return self.laplacian_chi - self.model.potential.df(self.state.chi)

    @cached_property
    def capillary_force(self):
        """``-div(grad chi (x) grad chi - |grad chi|^2/2 I) + grad f(chi)``."""
        cp = self.chi_p
        kx = capillary_stress((xface_normal(cp, self.dx), xface_tangential(cp, self.dy)))
        ky = capillary_stress((yface_tangential(cp, self.dx), yface_normal(cp, self.dy)))
        fp = self.model.potential.f(cp)
        return np.stack([
            -face_divergence(kx[0, 0], ky[0, 1], self.dx, self.dy) + ddx_padded(fp, self.dx),
            -face_divergence(kx[1, 0], ky[1, 1], self.dx, self.dy) + ddy_padded(fp, self.dy),
        ])

    # heat conduction
    @cached_property
    def face_conductivities(self):
        t, reg = self.model.transport, self.model.reg
        return (conductivity(self.xface_theta, self.xface_chi, t, reg),
                conductivity(self.yface_theta, self.yface_chi, t, reg))

    @cached_property
    def face_heat_fluxes(self):
        kx, ky = self.face_conductivities
        return (-kx * xface_normal(self.theta_p, self.dx),
                -ky * yface_normal(self.theta_p, self.dy))

    @cached_property
    def conduction_rate(self):
        """``-div q``; wall faces have zero normal temperature difference."""
        qx, qy = self.face_heat_fluxes
        return -face_divergence(qx, qy, self.dx, self.dy)

    @cached_property
    def conduction_production(self):
        """Cell share of ``sum_faces kappa (theta_R - theta_L)^2 / (theta_L theta_R h^2)``.

        Its integral equals ``int (1/theta)(-div q)`` exactly (summation by parts).
        """
        tp = self.theta_p
        kx, ky = self.face_conductivities
        cx = kx * (tp[1:-1, 1:] - tp[1:-1, :-1]) ** 2 / (tp[1:-1, 1:] * tp[1:-1, :-1] * self.dx ** 2)
        cy = ky * (tp[1:, 1:-1] - tp[:-1, 1:-1]) ** 2 / (tp[1:, 1:-1] * tp[:-1, 1:-1] * self.dy ** 2)
        return 0.5 * (cx[:, :-1] + cx[:, 1:]) + 0.5 * (cy[:-1, :] + cy[1:, :])

    @cached_property
    def entropy_production(self):
        """Pointwise ``(1/theta)[S:Du + (Delta chi - f')^2] + kappa |grad theta|^2 / theta^2``."""
        mech = self.viscous_heating + self.chemical_potential ** 2
        return mech / self.theta + self.conduction_production


# --- right-hand sides --------------------------------------------------------


def _disc(state, g, model, disc):
    if disc is not None:
        return disc
    theta = state.theta
    if theta is None:
        theta = recover_state_temperature(state, model)
    return Discretization(state, theta, g, model)


def rhs_continuity(state, g: GridSpec, model: Model, disc=None):
    d = _disc(state, g, model, disc)
    out = d.convective_rate(state.rho)
    if model.reg.epsilon > 0:
        out = out + model.reg.epsilon * laplacian_padded(d.rho_p, d.dx, d.dy)
    return out


def rhs_momentum(state, g: GridSpec, model: Model, disc=None):
    d = _disc(state, g, model, disc)
    pp = pad(d.total_pressure, BcKind.EXTRAPOLATE)
    grad_p = np.stack([ddx_padded(pp, d.dx), ddy_padded(pp, d.dy)])
    conv = np.stack([d.convective_rate(state.mom[0]), d.convective_rate(state.mom[1])])
    return conv - grad_p + d.viscous_divergence + d.capillary_force


def rhs_internal_energy(state, g: GridSpec, model: Model, disc=None):
    d = _disc(state, g, model, disc)
    out = (d.convective_rate(state.rho_e) + d.conduction_rate - d.pressure * d.div_u
           + d.viscous_heating + d.chemical_potential ** 2)
    reg = model.reg
    if reg.epsilon > 0 and reg.delta > 0:
        rho = state.rho
        grad_rho_sq = ddx_padded(d.rho_p, d.dx) ** 2 + ddy_padded(d.rho_p, d.dy) ** 2
        out = out + reg.epsilon * reg.delta * (reg.Gamma * rho ** (reg.Gamma - 2) + 2.0) * grad_rho_sq
    if reg.delta > 0:
        out = out + reg.delta / d.theta ** 2
    if reg.epsilon > 0:
        out = out - reg.epsilon * d.theta ** 5
    return out


def rhs_allen_cahn(state, g: GridSpec, model: Model, disc=None):
    d = _disc(state, g, model, disc)
    cp = d.chi_p
    c = cp[1:-1, 1:-1]
    ux, uy = d.u
    adv_x = np.where(ux > 0, ux * (c - cp[1:-1, :-2]), ux * (cp[1:-1, 2:] - c)) / d.dx
    adv_y = np.where(uy > 0, uy * (c - cp[:-2, 1:-1]), uy * (cp[2:, 1:-1] - c)) / d.dy
    return -(adv_x + adv_y) + d.chemical_potential


def evaluate_rhs(state, g: GridSpec, model: Model, t=0.0, disc=None):
    """All four rates, plus forcing when the model carries one."""
    d = _disc(state, g, model, disc)
    rates = Rates(rhs_continuity(state, g, model, d), rhs_momentum(state, g, model, d),
                  rhs_internal_energy(state, g, model, d), rhs_allen_cahn(state, g, model, d))
    if model.forcing is not None:
        s_rho, s_mom, s_e, s_chi = model.forcing(t)
        rates = Rates(rates.rho + s_rho, rates.mom + s_mom, rates.rho_e + s_e, rates.chi + s_chi)
    return rates


def _kernel_eos(eos: EosSpec):
    terms = np.array(eos.kernel.terms, dtype=float).reshape(-1, 2)
    return np.ascontiguousarray(terms[:, 0]), np.ascontiguousarray(terms[:, 1])


def compiled_rates(state: State, theta, g: GridSpec, model: Model, t=0.0):
    """Rates and pointwise entropy production from the compiled kernels.

    Same scheme as ``evaluate_rhs`` plus ``Discretization.entropy_production``.
    """
    reg, tr, e = model.reg, model.transport, model.eos
    coef, expo = _kernel_eos(e)
    rho = np.ascontiguousarray(state.rho)
    mx = np.ascontiguousarray(state.mom[0])
    my = np.ascontiguousarray(state.mom[1])
    rho_e = np.ascontiguousarray(state.rho_e)
    chi = np.ascontiguousarray(state.chi)
    theta = np.ascontiguousarray(theta)
    pads = _kernels.prepare(rho, mx, my, chi, theta, coef, expo, e.a, reg.delta, reg.Gamma)
    shape = g.shape
    d_rho, d_e, d_chi, prod = (np.empty(shape) for _ in range(4))
    d_mom = np.empty((2,) + shape)

    def rows(j0, j1):
        _kernels.rhs_rows(j0, j1, g.dx, g.dy, rho, mx, my, rho_e, chi, theta, *pads,
                          tr.mu_a, tr.mu_b, tr.eta_a, tr.kappa_a, tr.kappa_b,
                          reg.epsilon, reg.delta, reg.Gamma,
                          d_rho, d_mom[0], d_mom[1], d_e, d_chi, prod)

    run_row_blocks(rows, shape[0], model.workers)
    rates = Rates(d_rho, d_mom, d_e, d_chi)
    if model.forcing is not None:
        s_rho, s_mom, s_e, s_chi = model.forcing(t)
        rates = Rates(rates.rho + s_rho, rates.mom + s_mom, rates.rho_e + s_e, rates.chi + s_chi)
    return rates, prod


def rates_and_production(state: State, theta, g: GridSpec, model: Model, t=0.0):
    """Rates plus the pointwise entropy production, on whichever path the model selects."""
    if model.uses_kernels:
        return compiled_rates(state, theta, g, model, t)
    d = Discretization(state, theta, g, model)
    return evaluate_rhs(state, g, model, t, d), d.entropy_production


def entropy_production_field(state: State, theta, g: GridSpec, model: Model):
    """Pointwise entropy production with the solver's own discrete operators."""
    return rates_and_production(state, theta, g, model)[1]


# --- temperature recovery and validity --------------------------------------


def _recover_compiled(state: State, model: Model, guess, stage):
    rho = np.ascontiguousarray(state.rho, dtype=float)
    target = np.ascontiguousarray(state.rho_e, dtype=float)
    eos = model.eos
    bad = ~(np.isfinite(rho) & np.isfinite(target))
    if bad.any():
        raise StateCorruptionError("non-finite density or energy in temperature recovery",
                                   cell=_cell(bad), stage=stage)
    if (rho <= 0).any():
        raise StateCorruptionError("non-positive density in temperature recovery",
                                   cell=_cell(rho <= 0), stage=stage)
    bad = target <= 1.5 * eos.kernel.vacuum_limit() * rho ** _eos.FIVE_THIRDS
    if bad.any():
        raise StateCorruptionError("energy below the zero-temperature limit; no positive root",
                                   cell=_cell(bad), stage=stage)
    coef, expo = _kernel_eos(eos)
    guess = np.ascontiguousarray(np.broadcast_to(guess, rho.shape), dtype=float)
    out = np.empty_like(rho)
    status = np.zeros(rho.shape, dtype=np.int8)

    def rows(j0, j1):
        _kernels.recover_rows(j0, j1, rho, target, guess, coef, expo, eos.a, model.reg.delta,
                              1e-12, 100, out, status)

    run_row_blocks(rows, rho.shape[0], model.workers)
    if status.any():
        raise StateCorruptionError("temperature recovery did not converge",
                                   cell=_cell(status != 0), stage=stage)
    return out


def recover_state_temperature(state: State, model: Model, theta_guess=None, stage=None):
    if model.uses_kernels:
        guess = theta_guess if theta_guess is not None else 0.0
        return _recover_compiled(state, model, guess, stage)
    delta = model.reg.delta
    eos = model.eos

    def solve(rho, rho_e, guess):
        return _eos.recover_temperature(rho, rho_e, eos, theta_guess=guess, delta=delta)

    guess = theta_guess if theta_guess is not None else np.zeros_like(state.rho)
    try:
        return map_rows(solve, [state.rho, state.rho_e, guess], model.workers)
    except StateCorruptionError:
        # locate the cell on the whole grid rather than inside a row block
        try:
            solve(state.rho, state.rho_e, guess)
        except StateCorruptionError as exc:
            raise StateCorruptionError("temperature recovery failed", cell=exc.cell,
                                       stage=stage) from exc
        raise


def check_state(state: State, model: Model, stage=None):
    for name, arr in (("rho", state.rho), ("mom", state.mom), ("rho_e", state.rho_e),
                      ("chi", state.chi)):
        bad = ~np.isfinite(arr)
        if bad.any():
            raise StateCorruptionError(f"non-finite {name}", cell=_cell(bad), stage=stage)
    low = state.rho < model.rho_floor
    if low.any():
        raise StateCorruptionError(f"density below floor {model.rho_floor:g}",
                                   cell=_cell(low), stage=stage)


def _cell(mask):
    idx = np.argwhere(mask)[0]
    return tuple(idx[-2:])


def physical_energy_density(state: State, theta, model: Model):
    """``rho e`` (the unknown minus the ``delta rho theta`` regularisation)."""
    if model.reg.delta > 0:
        return state.rho_e - model.reg.delta * state.rho * theta
    return state.rho_e


# --- time step ---------------------------------------------------------------


def diffusivities(state: State, theta, model: Model):
    """Maximum kinematic viscosity and thermal diffusivity over the grid."""
    t, reg = model.transport, model.reg
    mu = t.mu(theta, state.chi)
    if reg.delta > 0:
        mu = mu + reg.delta * theta
    nu = (mu + np.abs(t.eta(theta, state.chi))) / state.rho
    kappa = conductivity(theta, state.chi, t, reg)
    cv = _eos.heat_capacity(state.rho, theta, model.eos) + reg.delta
    alpha = kappa / (state.rho * cv)
    return float(nu.max()), float(alpha.max())


def compute_dt(state: State, g: GridSpec, ctl: StepControl, model: Model, t=0.0, theta=None):
    theta = state.theta if theta is None else theta
    if theta is None:
        theta = recover_state_temperature(state, model)
    u = state.mom / state.rho
    c = _eos.sound_speed(state.rho, theta, model.eos)
    sx, sy = np.abs(u[0]) + c, np.abs(u[1]) + c
    if not (np.all(np.isfinite(sx)) and np.all(np.isfinite(sy))):
        raise StateCorruptionError("non-finite wave speed", cell=_cell(~np.isfinite(sx + sy)))
    h2 = min(g.dx, g.dy) ** 2
    nu, alpha = diffusivities(state, theta, model)
    limits = [g.dx / sx.max(), g.dy / sy.max(), ctl.diffusive_safety * h2]
    if nu > 0:
        limits.append(ctl.diffusive_safety * h2 / nu)
    if alpha > 0:
        limits.append(ctl.diffusive_safety * h2 / alpha)
    if model.reg.epsilon > 0:
        limits.append(ctl.diffusive_safety * h2 / model.reg.epsilon)
    dt = ctl.cfl * min(limits)
    dt = min(dt, ctl.dt_max)
    remaining = ctl.t_end - t
    if remaining <= dt * (1.0 + 1e-12):
        dt = max(remaining, 0.0)
    return dt


@dataclass
class StepStats:
    min_rho: float
    max_rho: float
    min_theta: float
    max_theta: float
    min_chi: float
    max_chi: float
    cfl_advective: float
    cfl_diffusive: float
    production: float
    """Heun-weighted average of the entropy production integral over the step."""


def _advance(state, rates, dt):
    return State(state.rho + dt * rates.rho, state.mom + dt * rates.mom,
                 state.rho_e + dt * rates.rho_e, state.chi + dt * rates.chi)


def _average(a: State, b: State):
    return State(0.5 * a.rho + 0.5 * b.rho, 0.5 * a.mom + 0.5 * b.mom,
                 0.5 * a.rho_e + 0.5 * b.rho_e, 0.5 * a.chi + 0.5 * b.chi)


def rk2_step(state: State, g: GridSpec, model: Model, t: float, dt: float):
    """One SSP-RK2 (Heun) step of size ``dt``; returns ``(new_state, stats)``."""
    theta0 = state.theta
    if theta0 is None:
        theta0 = recover_state_temperature(state, model, stage=0)
    k0, p0 = rates_and_production(state, theta0, g, model, t)
    prod0 = float(np.sum(p0)) * g.cell_area

    s1 = _advance(state, k0, dt)
    check_state(s1, model, stage=1)
    theta1 = recover_state_temperature(s1, model, theta0, stage=1)
    s1.theta = theta1
    k1, p1 = rates_and_production(s1, theta1, g, model, t + dt)
    prod1 = float(np.sum(p1)) * g.cell_area

    s2 = _average(state, _advance(s1, k1, dt))
    check_state(s2, model, stage=2)
    s2.theta = recover_state_temperature(s2, model, theta1, stage=2)

    u = s2.mom / s2.rho
    c = _eos.sound_speed(s2.rho, s2.theta, model.eos)
    cfl_adv = dt * max(float((np.abs(u[0]) + c).max()) / g.dx,
                       float((np.abs(u[1]) + c).max()) / g.dy)
    nu, alpha = diffusivities(s2, s2.theta, model)
    cfl_diff = dt * max(nu, alpha, 1.0) / min(g.dx, g.dy) ** 2
    stats = StepStats(
        float(s2.rho.min()), float(s2.rho.max()), float(s2.theta.min()), float(s2.theta.max()),
        float(s2.chi.min()), float(s2.chi.max()), cfl_adv, cfl_diff, 0.5 * (prod0 + prod1),
    )
    return s2, stats


def step(state: State, g: GridSpec, model: Model, t: float, ctl: StepControl):
    """Choose ``dt`` from the stability limits and take one SSP-RK2 step.

    Returns ``(new_state, dt, stats)``.  The incoming state is validated as stage 0.
    """
    check_state(state, model, stage=0)
    if state.theta is None:
        state = state.copy()
        state.theta = recover_state_temperature(state, model)
    dt = compute_dt(state, g, ctl, model, t)
    new, stats = rk2_step(state, g, model, t, dt)
    return new, dt, stats
