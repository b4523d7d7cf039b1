"""Analytic initial data: uniform state, circular bubble, shear layer."""

from __future__ import annotations

import numpy as np

from .eos import energy_density
from .errors import UsageError
from .grid import GridSpec
from .solver import Model, State


def from_primitives(rho, u, theta, chi, model: Model):
    """Build the conserved state from ``(rho, u, theta, chi)`` point values."""
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(rho < model.rho_floor):
        raise UsageError(f"initial density must be >= rho_floor = {model.rho_floor:g}")
    if np.any(theta <= 0):
        raise UsageError("initial temperature must be > 0")
    chi = np.asarray(chi, dtype=float)
    if np.any(np.abs(chi) > 1):
        raise UsageError("initial order parameter must lie in [-1, 1]")
    rho_e = energy_density(rho, theta, model.eos)
    if model.reg.delta > 0:
        rho_e = rho_e + model.reg.delta * rho * theta
    mom = rho * np.asarray(u, dtype=float)
    return State(rho.copy(), mom, rho_e, chi.copy(), theta.copy())


def uniform(g: GridSpec, model: Model, rho0=1.0, theta0=1.0, chi0=1.0, u0=(0.0, 0.0)):
    ones = np.ones(g.shape)
    u = np.stack([u0[0] * ones, u0[1] * ones])
    return from_primitives(rho0 * ones, u, theta0 * ones, chi0 * ones, model)


def bubble(g: GridSpec, model: Model, x0=0.5, y0=0.5, r0=0.25, w=0.05, rho0=1.0, theta0=1.0):
    """``chi = tanh((r0 - |x - x0|) / w)`` at rest, uniform density and temperature."""
    if w <= 0 or r0 <= 0:
        raise UsageError("bubble radius and width must be > 0")
    X, Y = g.centers()
    r = np.hypot(X - x0, Y - y0)
    chi = np.tanh((r0 - r) / w)
    ones = np.ones(g.shape)
    return from_primitives(rho0 * ones, np.zeros((2,) + g.shape), theta0 * ones, chi, model)


def shear(g: GridSpec, model: Model, amplitude=0.1, thickness=0.05, rho0=1.0, theta0=1.0):
    """Two phases separated by a horizontal shear layer at mid-height.

    The stream-wise velocity is damped by ``4 y (1 - y)`` (in units of ``Ly``)
    so it vanishes on the walls; a small cross-stream perturbation seeds
    roll-up.
    """
    if thickness <= 0:
        raise UsageError("shear thickness must be > 0")
    X, Y = g.centers()
    eta = Y / g.Ly
    envelope = 4.0 * eta * (1.0 - eta)
    layer = np.tanh((Y - 0.5 * g.Ly) / thickness)
    ux = amplitude * layer * envelope
    uy = 0.05 * amplitude * np.sin(2 * np.pi * X / g.Lx) * np.sin(np.pi * eta) ** 2
    ones = np.ones(g.shape)
    return from_primitives(rho0 * ones, np.stack([ux, uy]), theta0 * ones, layer, model)


INITIAL_CONDITIONS = {"uniform": uniform, "bubble": bubble, "shear": shear}
