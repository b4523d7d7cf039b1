"""Manufactured-solution harness.

``MmsCase`` describes smooth analytic fields that are compatible with the
boundary conditions (velocity vanishes on the walls, temperature and order
parameter have zero normal derivative).  Their residual under the continuous
equations is derived symbolically and fed to the solver as forcing, so the
forced discrete solution converges to the analytic fields and the observed
rate measures the discretisation order.
"""

from __future__ import annotations

import functools
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import sympy as sp
from numpy.polynomial import chebyshev as C

from .eos import EosSpec, TransportSpec
from .errors import StateCorruptionError, UsageError
from .grid import GridSpec, lp_norm
from .initial import from_primitives
from .solver import Model, StepControl, step

_t, _x, _y = sp.symbols("t x y", real=True)


@dataclass(frozen=True)
class MmsCase:
    """Trigonometric manufactured solution on ``[0, Lx] x [0, Ly]`` (``X = x / Lx``, ``Y = y / Ly``)::

        rho   = rho0   + rho_amp   cos(pi X) cos(pi Y) cos t
        theta = theta0 + theta_amp cos(pi X) cos(2 pi Y) (1 + t)
        chi   = chi0   + chi_amp   cos(2 pi X) cos(pi Y) exp(-t)
        u     = u_amp (sin(pi X) sin(2 pi Y), -sin(2 pi X) sin(pi Y)) cos t
    """

    name: str = "convection"
    rho0: float = 1.0
    rho_amp: float = 0.1
    theta0: float = 1.0
    theta_amp: float = 0.1
    chi0: float = 0.0
    chi_amp: float = 0.5
    u_amp: float = 0.3

    def __post_init__(self):
        if not self.rho0 - abs(self.rho_amp) > 0:
            raise UsageError("manufactured density must stay positive")
        if not self.theta0 - 2.0 * abs(self.theta_amp) > 0:
            raise UsageError("manufactured temperature must stay positive for t <= 1")
        if abs(self.chi0) + abs(self.chi_amp) > 1:
            raise UsageError("manufactured order parameter must stay in [-1, 1]")

    @classmethod
    def convection(cls):
        return cls()

    @classmethod
    def diffusion_only(cls):
        """Same fields at rest: no convective transport."""
        return cls(name="diffusion", u_amp=0.0)

    @classmethod
    def pure_state(cls, chi=1.0, rho=1.0, theta=1.0):
        """Uniform pure phase at rest; an exact unforced solution."""
        return cls(name="pure", rho0=rho, rho_amp=0.0, theta0=theta, theta_amp=0.0,
                   chi0=chi, chi_amp=0.0, u_amp=0.0)

    def symbolic(self, Lx=1.0, Ly=1.0):
        """``(rho, ux, uy, theta, chi)`` as sympy expressions in ``(t, x, y)``."""
        X, Y = sp.pi * _x / Lx, sp.pi * _y / Ly
        r = lambda v: sp.nsimplify(v)
        rho = r(self.rho0) + r(self.rho_amp) * sp.cos(X) * sp.cos(Y) * sp.cos(_t)
        theta = r(self.theta0) + r(self.theta_amp) * sp.cos(X) * sp.cos(2 * Y) * (1 + _t)
        chi = r(self.chi0) + r(self.chi_amp) * sp.cos(2 * X) * sp.cos(Y) * sp.exp(-_t)
        ux = r(self.u_amp) * sp.sin(X) * sp.sin(2 * Y) * sp.cos(_t)
        uy = -r(self.u_amp) * sp.sin(2 * X) * sp.sin(Y) * sp.cos(_t)
        return rho, ux, uy, theta, chi


# --- symbolic residuals ------------------------------------------------------


def _sym_pressure(rho, theta, eos: EosSpec):
    p = sum(sp.nsimplify(c) * rho ** a * theta ** ((5 - 3 * a) / 2)
            for c, a in eos.kernel.rational_terms())
    return p + sp.nsimplify(eos.a) / 3 * theta ** 4


def _sym_energy(rho, theta, eos: EosSpec):
    el = sum(sp.nsimplify(c) * rho ** a * theta ** ((5 - 3 * a) / 2)
             for c, a in eos.kernel.rational_terms())
    return sp.Rational(3, 2) * el + sp.nsimplify(eos.a) * theta ** 4


def symbolic_sources(case: MmsCase, model: Model, Lx=1.0, Ly=1.0):
    """Residuals ``(s_rho, s_mx, s_my, s_rho_e, s_chi)`` of the analytic fields."""
    if model.reg.active:
        raise UsageError("manufactured sources are derived for the base model (epsilon = delta = 0)")
    rho, ux, uy, theta, chi = case.symbolic(Lx, Ly)
    tr: TransportSpec = model.transport
    pot = model.potential
    d = (lambda e: sp.diff(e, _x), lambda e: sp.diff(e, _y))
    u = (ux, uy)
    grad_u = [[d[b](u[a]) for b in range(2)] for a in range(2)]
    div_u = grad_u[0][0] + grad_u[1][1]
    mu, eta = tr.mu(theta, chi), tr.eta(theta, chi)
    S = [[mu * (sp.Rational(1, 2) * (grad_u[a][b] + grad_u[b][a]) - (div_u / 2 if a == b else 0))
          + (eta * div_u if a == b else 0) for b in range(2)] for a in range(2)]
    gchi = (d[0](chi), d[1](chi))
    half = (gchi[0] ** 2 + gchi[1] ** 2) / 2
    K = [[gchi[a] * gchi[b] - (half if a == b else 0) for b in range(2)] for a in range(2)]
    p = _sym_pressure(rho, theta, model.eos)
    E = _sym_energy(rho, theta, model.eos)
    kappa = tr.kappa(theta, chi)
    lap_chi = d[0](gchi[0]) + d[1](gchi[1])
    chem = lap_chi - pot.df(chi)

    s_rho = sp.diff(rho, _t) + d[0](rho * ux) + d[1](rho * uy)
    s_m = []
    for a in range(2):
        expr = sp.diff(rho * u[a], _t) + d[a](p) - d[a](pot.f(chi))
        for b in range(2):
            expr += d[b](rho * u[a] * u[b]) - d[b](S[a][b]) + d[b](K[a][b])
        s_m.append(expr)
    heat = sum(S[a][b] * grad_u[a][b] for a in range(2) for b in range(2))
    div_q = -(d[0](kappa * d[0](theta)) + d[1](kappa * d[1](theta)))
    s_e = (sp.diff(E, _t) + d[0](E * ux) + d[1](E * uy) + div_q + p * div_u - heat - chem ** 2)
    s_chi = sp.diff(chi, _t) + ux * gchi[0] + uy * gchi[1] - chem
    return s_rho, s_m[0], s_m[1], s_e, s_chi


@functools.lru_cache(maxsize=32)
def _compiled(case: MmsCase, eos: EosSpec, transport: TransportSpec, potential, Lx, Ly):
    model = Model(eos=eos, transport=transport, potential=potential)
    rho, ux, uy, theta, chi = case.symbolic(Lx, Ly)
    fields_fn = sp.lambdify((_t, _x, _y), [rho, ux, uy, theta, chi], modules="numpy", cse=True)
    sources_fn = sp.lambdify((_t, _x, _y), list(symbolic_sources(case, model, Lx, Ly)),
                             modules="numpy", cse=True)
    return fields_fn, sources_fn


def _evaluate(fn, t, g: GridSpec):
    X, Y = g.centers()
    return [np.broadcast_to(np.asarray(v, dtype=float), g.shape).copy() for v in fn(t, X, Y)]


def _functions(case, g, model):
    return _compiled(case, model.eos, model.transport, model.potential, float(g.Lx), float(g.Ly))


def exact_fields(case: MmsCase, t, g: GridSpec, model: Model):
    """Analytic ``(rho, u, theta, chi)`` at the cell centres."""
    rho, ux, uy, theta, chi = _evaluate(_functions(case, g, model)[0], t, g)
    return rho, np.stack([ux, uy]), theta, chi


def mms_sources(case: MmsCase, t, g: GridSpec, model: Model):
    """Exact forcing ``(s_rho, s_mom, s_rho_e, s_chi)`` at the cell centres at time ``t``."""
    s_rho, s_mx, s_my, s_e, s_chi = _evaluate(_functions(case, g, model)[1], t, g)
    return s_rho, np.stack([s_mx, s_my]), s_e, s_chi


class MmsForcing:
    """Time-dependent forcing for the solver's ``forcing`` hook.

    Over ``[0, t_final]`` the exact sources are replaced by their Chebyshev
    interpolant of degree ``degree`` in time, built from exact evaluations at
    Chebyshev points.  For the built-in case (unit time scale) and short
    windows the interpolation error is far below round-off, while each call
    costs a few array updates instead of a full symbolic evaluation.
    """

    def __init__(self, case: MmsCase, g: GridSpec, model: Model, t_final, degree=12):
        self.t_final = float(t_final)
        self.shape = g.shape
        if self.t_final > 0:
            nodes = C.chebpts2(degree + 1)
            times = 0.5 * self.t_final * (nodes + 1.0)
            samples = np.array([self._pack(mms_sources(case, tk, g, model)) for tk in times])
            self.coef = C.chebfit(nodes, samples, degree)
        else:
            self.coef = self._pack(mms_sources(case, 0.0, g, model))[None, :]

    @staticmethod
    def _pack(sources):
        s_rho, s_mom, s_e, s_chi = sources
        return np.concatenate([s_rho.ravel(), s_mom.ravel(), s_e.ravel(), s_chi.ravel()])

    def __call__(self, t):
        if self.t_final > 0:
            s = 2.0 * t / self.t_final - 1.0
            flat = C.chebval(s, self.coef)
        else:
            flat = self.coef[0]
        n = self.shape[0] * self.shape[1]
        parts = np.split(flat, [n, 3 * n, 4 * n])
        return (parts[0].reshape(self.shape), parts[1].reshape((2,) + self.shape),
                parts[2].reshape(self.shape), parts[3].reshape(self.shape))


# --- convergence study -------------------------------------------------------

ERROR_FIELDS = ("rho", "m", "rho_e", "chi")


@dataclass
class ConvergenceTable:
    case: str
    t_final: float
    nx: list = field(default_factory=list)
    h: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    errors: dict = field(default_factory=lambda: {k: [] for k in ERROR_FIELDS})

    @property
    def rates(self):
        """Successive ``log2(e_coarse / e_fine)`` per field."""
        out = {}
        for k, e in self.errors.items():
            e = np.asarray(e, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                out[k] = np.log(e[:-1] / e[1:]) / np.log(np.asarray(self.h[:-1]) / np.asarray(self.h[1:]))
        return out

    def to_csv(self):
        buf = io.StringIO()
        buf.write("nx,h,steps," + ",".join(f"err_{k}" for k in ERROR_FIELDS)
                  + "," + ",".join(f"rate_{k}" for k in ERROR_FIELDS) + "\n")
        rates = self.rates
        for i in range(len(self.nx)):
            row = [str(self.nx[i]), format(self.h[i], ".17g"), str(self.steps[i])]
            row += [format(self.errors[k][i], ".17g") for k in ERROR_FIELDS]
            row += ["" if i == 0 else format(rates[k][i - 1], ".6f") for k in ERROR_FIELDS]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_text(self):
        lines = [f"case {self.case}, t_final = {self.t_final:g}",
                 f"{'nx':>6} {'h':>10} " + " ".join(f"{'L2 ' + k:>12} {'rate':>6}" for k in ERROR_FIELDS)]
        rates = self.rates
        for i in range(len(self.nx)):
            cells = []
            for k in ERROR_FIELDS:
                r = "" if i == 0 else f"{rates[k][i - 1]:6.2f}"
                cells.append(f"{self.errors[k][i]:12.4e} {r:>6}")
            lines.append(f"{self.nx[i]:>6} {self.h[i]:10.4e} " + " ".join(cells))
        return "\n".join(lines) + "\n"


def solve_case(case: MmsCase, g: GridSpec, t_final, model: Optional[Model] = None, cfl=0.4,
               forced=True):
    """Run the (forced) solver from the analytic data to ``t_final``; returns ``(state, steps)``."""
    model = model or Model()
    rho, u, theta, chi = exact_fields(case, 0.0, g, model)
    if forced:
        model = model.replace(forcing=MmsForcing(case, g, model, t_final))
    state = from_primitives(rho, u, theta, chi, model)
    ctl = StepControl(t_end=t_final, cfl=cfl)
    t, n = 0.0, 0
    while t < t_final:
        state, dt, _ = step(state, g, model, t, ctl)
        t = t_final if dt == t_final - t else t + dt
        n += 1
    return state, n


def field_errors(case: MmsCase, state, t, g: GridSpec, model: Model):
    rho, u, theta, chi = exact_fields(case, t, g, model)
    exact = from_primitives(rho, u, theta, chi, model)
    e_m = math.hypot(lp_norm(state.mom[0] - exact.mom[0], g, 2),
                     lp_norm(state.mom[1] - exact.mom[1], g, 2))
    return {"rho": lp_norm(state.rho - exact.rho, g, 2), "m": e_m,
            "rho_e": lp_norm(state.rho_e - exact.rho_e, g, 2),
            "chi": lp_norm(state.chi - exact.chi, g, 2)}


def convergence_study(case: MmsCase, grids, t_final=0.05, model: Optional[Model] = None, cfl=0.4):
    """L2 errors against the analytic fields on every grid, plus successive rates."""
    grids = list(grids)
    if len(grids) < 3:
        raise UsageError("a convergence study needs at least three grids")
    for a, b in zip(grids[:-1], grids[1:]):
        if (b.nx, b.ny) != (2 * a.nx, 2 * a.ny) or (a.Lx, a.Ly) != (b.Lx, b.Ly):
            raise UsageError("grids must refine by a factor of 2 on the same domain")
    model = model or Model()
    table = ConvergenceTable(case.name, float(t_final))
    for g in grids:
        try:
            state, n = solve_case(case, g, t_final, model, cfl)
        except StateCorruptionError as exc:
            raise StateCorruptionError(f"grid {g.nx}x{g.ny}: {exc.message}", cell=exc.cell,
                                       stage=exc.stage) from exc
        errs = field_errors(case, state, t_final, g, model)
        table.nx.append(g.nx)
        table.h.append(g.dx)
        table.steps.append(n)
        for k in ERROR_FIELDS:
            table.errors[k].append(errs[k])
    return table


def standard_grids(levels=3, n0=32, L=1.0):
    return [GridSpec(n0 * 2 ** k, n0 * 2 ** k, L, L) for k in range(levels)]
