"""Uniform cell-centred 2D grid, finite-difference operators and quadrature.

Arrays are stored with shape ``(ny, nx)`` (row index ``j`` along y, column
index ``i`` along x, x fastest), vector fields as ``(2, ny, nx)`` and tensor
fields as ``(2, 2, ny, nx)`` with ``T[a, b]`` the (a, b) component.

Boundary values enter through one layer of ghost cells:

* ``NEUMANN``      ghost = mirrored interior value (zero normal derivative)
* ``NOSLIP``       ghost = negated interior value (zero value on the wall)
* ``EXTRAPOLATE``  ghost = linear extrapolation (no boundary condition)
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import UsageError


class BcKind(enum.Enum):
    NEUMANN = "neumann"
    NOSLIP = "noslip"
    EXTRAPOLATE = "extrapolate"


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise UsageError("nx, ny must be integers")
        if self.nx < 4 or self.ny < 4:
            raise UsageError("nx, ny must be >= 4")
        if not (self.Lx > 0 and self.Ly > 0):
            raise UsageError("Lx, Ly must be > 0")

    @property
    def dx(self):
        return self.Lx / self.nx

    @property
    def dy(self):
        return self.Ly / self.ny

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def cell_area(self):
        return self.dx * self.dy

    @property
    def area(self):
        return self.Lx * self.Ly

    def centers(self):
        """Cell-centre coordinates ``(X, Y)``, each of shape ``(ny, nx)``."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="xy")

    def refined(self, factor=2):
        return GridSpec(self.nx * factor, self.ny * factor, self.Lx, self.Ly)


def _check_scalar(s, g):
    s = np.asarray(s, dtype=float)
    if s.shape != g.shape:
        raise UsageError(f"field shape {s.shape} does not match grid {g.shape}")
    return s


def _check_vector(v, g):
    v = np.asarray(v, dtype=float)
    if v.shape != (2,) + g.shape:
        raise UsageError(f"vector field shape {v.shape} does not match grid {g.shape}")
    return v


def pad(s, bc: BcKind):
    """Return ``s`` with one ghost layer, shape ``(ny + 2, nx + 2)``."""
    if bc is BcKind.NEUMANN:
        return np.pad(s, 1, mode="edge")
    if bc is BcKind.NOSLIP:
        p = np.pad(s, 1, mode="edge")
        p[0, :] *= -1.0
        p[-1, :] *= -1.0
        p[:, 0] *= -1.0
        p[:, -1] *= -1.0
        return p
    if bc is BcKind.EXTRAPOLATE:
        p = np.pad(s, 1, mode="edge")
        p[1:-1, 0] = 2.0 * s[:, 0] - s[:, 1]
        p[1:-1, -1] = 2.0 * s[:, -1] - s[:, -2]
        p[0, 1:-1] = 2.0 * s[0, :] - s[1, :]
        p[-1, 1:-1] = 2.0 * s[-1, :] - s[-2, :]
        p[0, 0] = 2.0 * p[1, 0] - p[2, 0]
        p[0, -1] = 2.0 * p[1, -1] - p[2, -1]
        p[-1, 0] = 2.0 * p[-2, 0] - p[-3, 0]
        p[-1, -1] = 2.0 * p[-2, -1] - p[-3, -1]
        return p
    raise UsageError(f"unknown boundary kind {bc!r}")


# --- stencils on padded arrays ----------------------------------------------


def ddx_padded(sp, dx):
    """Central x-derivative at cell centres from a padded array."""
    return (sp[1:-1, 2:] - sp[1:-1, :-2]) / (2.0 * dx)


def ddy_padded(sp, dy):
    return (sp[2:, 1:-1] - sp[:-2, 1:-1]) / (2.0 * dy)


def laplacian_padded(sp, dx, dy):
    c = sp[1:-1, 1:-1]
    return (((sp[1:-1, 2:] - c) + (sp[1:-1, :-2] - c)) / (dx * dx)
            + ((sp[2:, 1:-1] - c) + (sp[:-2, 1:-1] - c)) / (dy * dy))


def xface_average(sp):
    """Average onto x-faces: shape ``(ny, nx + 1)``; face ``i`` sits left of cell ``i``."""
    return 0.5 * (sp[1:-1, :-1] + sp[1:-1, 1:])


def yface_average(sp):
    return 0.5 * (sp[:-1, 1:-1] + sp[1:, 1:-1])


def xface_normal(sp, dx):
    return (sp[1:-1, 1:] - sp[1:-1, :-1]) / dx


def yface_normal(sp, dy):
    return (sp[1:, 1:-1] - sp[:-1, 1:-1]) / dy


def xface_tangential(sp, dy):
    """y-derivative on x-faces: average of the central y-derivatives of both neighbours."""
    c = (sp[2:, :] - sp[:-2, :]) / (2.0 * dy)
    return 0.5 * (c[:, :-1] + c[:, 1:])


def yface_tangential(sp, dx):
    c = (sp[:, 2:] - sp[:, :-2]) / (2.0 * dx)
    return 0.5 * (c[:-1, :] + c[1:, :])


def face_divergence(fx, fy, dx, dy):
    """Cell divergence from x-face fluxes ``(ny, nx+1)`` and y-face fluxes ``(ny+1, nx)``."""
    return (fx[:, 1:] - fx[:, :-1]) / dx + (fy[1:, :] - fy[:-1, :]) / dy


# --- public operators --------------------------------------------------------


def gradient(s, bc: BcKind, g: GridSpec):
    """Second-order central gradient; returns a ``(2, ny, nx)`` vector field."""
    s = _check_scalar(s, g)
    sp = pad(s, bc)
    return np.stack([ddx_padded(sp, g.dx), ddy_padded(sp, g.dy)])


def vector_gradient(v, bc: BcKind, g: GridSpec):
    """``G[a, b] = d v_a / d x_b`` as a ``(2, 2, ny, nx)`` tensor field."""
    v = _check_vector(v, g)
    return np.stack([gradient(v[0], bc, g), gradient(v[1], bc, g)])


def divergence(v, g: GridSpec, bc: BcKind = BcKind.NOSLIP):
    v = _check_vector(v, g)
    return ddx_padded(pad(v[0], bc), g.dx) + ddy_padded(pad(v[1], bc), g.dy)


def laplacian(s, bc: BcKind, g: GridSpec):
    """Compact five-point Laplacian.

    With ``NEUMANN`` ghosts every boundary face carries zero flux, so the
    discrete integral of the result vanishes up to round-off.
    """
    s = _check_scalar(s, g)
    return laplacian_padded(pad(s, bc), g.dx, g.dy)


def tensor_divergence(T, g: GridSpec, bc: BcKind = BcKind.EXTRAPOLATE):
    """Row-wise divergence ``(div T)_a = d T_ab / d x_b``."""
    T = np.asarray(T, dtype=float)
    if T.shape != (2, 2) + g.shape:
        raise UsageError(f"tensor field shape {T.shape} does not match grid {g.shape}")
    out = np.empty((2,) + g.shape)
    for a in range(2):
        out[a] = ddx_padded(pad(T[a, 0], bc), g.dx) + ddy_padded(pad(T[a, 1], bc), g.dy)
    return out


# --- quadrature --------------------------------------------------------------


def total(values):
    """Correctly rounded sum; independent of array layout, order and worker count."""
    return math.fsum(np.asarray(values, dtype=float).ravel())


def integrate(s, g: GridSpec):
    """Midpoint quadrature of a cell-centred field."""
    s = _check_scalar(s, g)
    return total(s) * g.cell_area


def lp_norm(s, g: GridSpec, p):
    s = np.abs(_check_scalar(s, g))
    if np.isinf(p):
        return float(s.max())
    return integrate(s ** p, g) ** (1.0 / p)


def dirichlet_energy(s, g: GridSpec):
    """``1/2 int |grad s|^2`` from face differences with homogeneous Neumann walls.

    This is the quadratic form whose variation is exactly minus the compact
    Neumann Laplacian, so it is the discrete counterpart of the interfacial
    energy used by the solver.
    """
    s = _check_scalar(s, g)
    gx = np.diff(s, axis=1) / g.dx
    gy = np.diff(s, axis=0) / g.dy
    return 0.5 * (total(gx * gx) + total(gy * gy)) * g.cell_area


def h1_seminorm(s, g: GridSpec):
    return math.sqrt(2.0 * dirichlet_energy(s, g))


@dataclass(frozen=True)
class Norms:
    L1: float
    L2: float
    L4: float
    Linf: float
    H1: float


def norms(s, g: GridSpec):
    return Norms(lp_norm(s, g, 1), lp_norm(s, g, 2), lp_norm(s, g, 4),
                 lp_norm(s, g, np.inf), h1_seminorm(s, g))


# --- row-block parallelism ---------------------------------------------------


def row_blocks(n_rows, workers):
    """Split ``range(n_rows)`` into at most ``workers`` contiguous slices."""
    workers = max(1, min(int(workers), n_rows))
    edges = np.linspace(0, n_rows, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


_POOLS = {}


def _pool(workers):
    pool = _POOLS.get(workers)
    if pool is None:
        pool = _POOLS[workers] = ThreadPoolExecutor(max_workers=workers)
    return pool


def run_row_blocks(func, n_rows, workers=1):
    """Call ``func(j0, j1)`` once per row block; blocks run on a shared thread pool.

    ``func`` must write rows ``[j0, j1)`` of its outputs only.
    """
    blocks = row_blocks(n_rows, workers)
    if len(blocks) == 1:
        func(0, n_rows)
        return
    futures = [_pool(len(blocks)).submit(func, b.start, b.stop) for b in blocks]
    for f in futures:
        f.result()


def map_rows(func, arrays, workers=1):
    """Apply a cellwise ``func(*arrays)`` over row blocks and reassemble.

    Each output row is produced by exactly one call, so for cellwise ``func``
    the result is identical for every worker count.
    """
    arrays = [np.asarray(a) for a in arrays]
    n_rows = arrays[0].shape[0]
    blocks = row_blocks(n_rows, workers)
    if len(blocks) == 1:
        return func(*arrays)
    parts = list(_pool(len(blocks)).map(lambda b: func(*(a[b] for a in arrays)), blocks))
    return np.concatenate(parts, axis=0)
