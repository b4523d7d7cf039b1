"""Compiled stencil kernels for the time stepper.

Numerically the same scheme as ``solver.Discretization`` (which stays the
readable reference and is cross-checked against these kernels in the test
suite).  Kernels work on row ranges ``[j0, j1)`` and write only those rows,
so row blocks can be processed by independent threads (``nogil``) without
changing a single bit of the result.

Only the double-well potential is compiled in; other potentials use the
reference path.
"""

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True, fastmath=False, error_model="numpy")


@njit(**_JIT)
def _pow(z, alpha):
    if alpha == 1.0:
        return z
    if alpha == 0.0:
        return 1.0
    return z ** alpha


@njit(**_JIT)
def _elastic(rho, theta, coef, expo):
    out = 0.0
    for k in range(coef.shape[0]):
        a = expo[k]
        out += coef[k] * _pow(rho, a) * _pow(theta, (5.0 - 3.0 * a) / 2.0)
    return out


@njit(**_JIT)
def _elastic_dtheta(rho, theta, coef, expo):
    out = 0.0
    for k in range(coef.shape[0]):
        a = expo[k]
        e = (5.0 - 3.0 * a) / 2.0
        if e != 0.0:
            out += coef[k] * e * _pow(rho, a) * _pow(theta, e - 1.0)
    return out


@njit(**_JIT)
def recover_rows(j0, j1, rho, target, guess, coef, expo, a, delta, rtol, max_iter, out, status):
    """Safeguarded Newton per cell; ``status[j, i]`` is 0 on success, 1 otherwise."""
    nx = rho.shape[1]
    nt = coef.shape[0]
    w = np.empty(nt)
    ex = np.empty(nt)
    for k in range(nt):
        ex[k] = (5.0 - 3.0 * expo[k]) / 2.0
    for j in range(j0, j1):
        for i in range(nx):
            r = rho[j, i]
            for k in range(nt):
                w[k] = coef[k] * _pow(r, expo[k])
            tg = target[j, i]
            lo = 0.0
            hi = np.sqrt(np.sqrt(tg / a))
            th = guess[j, i]
            if not (th > lo and th < hi):
                th = hi
            ok = False
            for _ in range(max_iter):
                el = 0.0
                de = 0.0
                for k in range(nt):
                    e = ex[k]
                    el += w[k] * _pow(th, e)
                    if e != 0.0:
                        de += w[k] * e * _pow(th, e - 1.0)
                t3 = th * th * th
                g = 1.5 * el + a * (t3 * th) + delta * r * th - tg
                dg = 1.5 * de + 4.0 * a * t3 + delta * r
                if g > 0:
                    hi = th
                else:
                    lo = th
                if g == 0:
                    new = th
                else:
                    new = th - g / dg
                if new < lo or new > hi:
                    new = 0.5 * (lo + hi)
                step = abs(new - th)
                th = new
                if step <= rtol * new or abs(g) <= 4 * 2.220446049250313e-16 * tg:
                    ok = True
                    break
            out[j, i] = th
            status[j, i] = 0 if ok else 1


# --- padding -----------------------------------------------------------------


@njit(**_JIT)
def _pad_neumann(s):
    ny, nx = s.shape
    p = np.empty((ny + 2, nx + 2))
    for j in range(ny + 2):
        jj = min(max(j - 1, 0), ny - 1)
        for i in range(nx + 2):
            ii = min(max(i - 1, 0), nx - 1)
            p[j, i] = s[jj, ii]
    return p


@njit(**_JIT)
def _pad_noslip(s):
    ny, nx = s.shape
    p = np.empty((ny + 2, nx + 2))
    for j in range(ny + 2):
        jj = min(max(j - 1, 0), ny - 1)
        sj = -1.0 if (j == 0 or j == ny + 1) else 1.0
        for i in range(nx + 2):
            ii = min(max(i - 1, 0), nx - 1)
            si = -1.0 if (i == 0 or i == nx + 1) else 1.0
            p[j, i] = s[jj, ii] * (sj * si)
    return p


@njit(**_JIT)
def _pad_extrapolate(s):
    """Edges only; corners are never read by the central-gradient stencil."""
    ny, nx = s.shape
    p = np.zeros((ny + 2, nx + 2))
    p[1:-1, 1:-1] = s
    for j in range(ny):
        p[j + 1, 0] = 2.0 * s[j, 0] - s[j, 1]
        p[j + 1, nx + 1] = 2.0 * s[j, nx - 1] - s[j, nx - 2]
    for i in range(nx):
        p[0, i + 1] = 2.0 * s[0, i] - s[1, i]
        p[ny + 1, i + 1] = 2.0 * s[ny - 1, i] - s[ny - 2, i]
    return p


@njit(**_JIT)
def prepare(rho, mx, my, chi, theta, coef, expo, a, delta, gamma):
    """Padded primitive fields and the cell pressure."""
    ny, nx = rho.shape
    ux = np.empty((ny, nx))
    uy = np.empty((ny, nx))
    p = np.empty((ny, nx))
    ptot = np.empty((ny, nx))
    fchi = np.empty((ny, nx))
    for j in range(ny):
        for i in range(nx):
            r = rho[j, i]
            th = theta[j, i]
            ux[j, i] = mx[j, i] / r
            uy[j, i] = my[j, i] / r
            pj = _elastic(r, th, coef, expo) + a / 3.0 * th ** 4
            p[j, i] = pj
            if delta > 0:
                pj = pj + delta * (r ** gamma + r * r)
            ptot[j, i] = pj
            c = chi[j, i]
            fchi[j, i] = 0.25 * (1.0 - c * c) ** 2
    return (ux, uy, p, _pad_noslip(ux), _pad_noslip(uy), _pad_neumann(theta),
            _pad_neumann(chi), _pad_neumann(rho), _pad_extrapolate(ptot), _pad_neumann(fchi))


# --- right-hand side ---------------------------------------------------------
#
# Face quantities of a row block are computed once into local arrays (x-faces
# ``(rows, nx + 1)``, y-faces ``(rows + 1, nx)``) and then differenced.  Face
# slots: 0-3 convective fluxes of rho, m_x, m_y, rho e; 4-5 viscous stress
# row (normal, tangential); 6-7 Korteweg stress row; 8 heat flux; 9 conduction
# production.


@njit(**_JIT)
def _transport(th, c, mu_a, mu_b, eta_a, kappa_a, kappa_b, delta, gamma):
    mu = mu_a * (1.0 + th) + mu_b * (1.0 + c) / 2.0
    if delta > 0:
        mu = mu + delta * th
    eta = eta_a * (1.0 + th)
    kap = kappa_a * (1.0 + th * th * th) * (1.0 + kappa_b * (1.0 + c) / 2.0)
    if delta > 0:
        kap = kap + delta * (th ** gamma + 1.0 / th)
    return mu, eta, kap


@njit(**_JIT)
def _xfaces(j0, j1, idx, idy, rho, mx, my, E, UX, UY, TH, CH,
            mu_a, mu_b, eta_a, kappa_a, kappa_b, delta, gamma):
    ny, nx = rho.shape
    F = np.zeros((10, j1 - j0, nx + 1))
    hy = 0.25 * idy
    for j in range(j0, j1):
        J = j + 1
        r = j - j0
        for I in range(nx + 1):
            uL = UX[J, I]
            uR = UX[J, I + 1]
            if I != 0 and I != nx:
                iL = I - 1
                lam = max(abs(uL), abs(uR))
                F[0, r, I] = 0.5 * (rho[j, iL] * uL + rho[j, I] * uR) - 0.5 * lam * (rho[j, I] - rho[j, iL])
                F[1, r, I] = 0.5 * (mx[j, iL] * uL + mx[j, I] * uR) - 0.5 * lam * (mx[j, I] - mx[j, iL])
                F[2, r, I] = 0.5 * (my[j, iL] * uL + my[j, I] * uR) - 0.5 * lam * (my[j, I] - my[j, iL])
                F[3, r, I] = 0.5 * (E[j, iL] * uL + E[j, I] * uR) - 0.5 * lam * (E[j, I] - E[j, iL])
            gxx = (uR - uL) * idx
            gyx = (UY[J, I + 1] - UY[J, I]) * idx
            gxy = ((UX[J + 1, I] - UX[J - 1, I]) + (UX[J + 1, I + 1] - UX[J - 1, I + 1])) * hy
            gyy = ((UY[J + 1, I] - UY[J - 1, I]) + (UY[J + 1, I + 1] - UY[J - 1, I + 1])) * hy
            tL = TH[J, I]
            tR = TH[J, I + 1]
            mu, eta, kap = _transport(0.5 * (tL + tR), 0.5 * (CH[J, I] + CH[J, I + 1]),
                                      mu_a, mu_b, eta_a, kappa_a, kappa_b, delta, gamma)
            F[4, r, I] = mu * (0.5 * (gxx - gyy)) + eta * (gxx + gyy)
            F[5, r, I] = mu * (0.5 * (gxy + gyx))
            cx = (CH[J, I + 1] - CH[J, I]) * idx
            cy = ((CH[J + 1, I] - CH[J - 1, I]) + (CH[J + 1, I + 1] - CH[J - 1, I + 1])) * hy
            F[6, r, I] = 0.5 * (cx * cx - cy * cy)
            F[7, r, I] = cx * cy
            dT = (tR - tL) * idx
            F[8, r, I] = -kap * dT
            F[9, r, I] = kap * dT * dT / (tR * tL)
    return F


@njit(**_JIT)
def _yfaces(j0, j1, idx, idy, rho, mx, my, E, UX, UY, TH, CH,
            mu_a, mu_b, eta_a, kappa_a, kappa_b, delta, gamma):
    ny, nx = rho.shape
    F = np.zeros((10, j1 - j0 + 1, nx))
    hx = 0.25 * idx
    for J in range(j0, j1 + 1):
        r = J - j0
        for i in range(nx):
            I = i + 1
            vB = UY[J, I]
            vT = UY[J + 1, I]
            if J != 0 and J != ny:
                jB = J - 1
                lam = max(abs(vB), abs(vT))
                F[0, r, i] = 0.5 * (rho[jB, i] * vB + rho[J, i] * vT) - 0.5 * lam * (rho[J, i] - rho[jB, i])
                F[1, r, i] = 0.5 * (mx[jB, i] * vB + mx[J, i] * vT) - 0.5 * lam * (mx[J, i] - mx[jB, i])
                F[2, r, i] = 0.5 * (my[jB, i] * vB + my[J, i] * vT) - 0.5 * lam * (my[J, i] - my[jB, i])
                F[3, r, i] = 0.5 * (E[jB, i] * vB + E[J, i] * vT) - 0.5 * lam * (E[J, i] - E[jB, i])
            gxx = ((UX[J, I + 1] - UX[J, I - 1]) + (UX[J + 1, I + 1] - UX[J + 1, I - 1])) * hx
            gyx = ((UY[J, I + 1] - UY[J, I - 1]) + (UY[J + 1, I + 1] - UY[J + 1, I - 1])) * hx
            gxy = (UX[J + 1, I] - UX[J, I]) * idy
            gyy = (vT - vB) * idy
            tB = TH[J, I]
            tT = TH[J + 1, I]
            mu, eta, kap = _transport(0.5 * (tB + tT), 0.5 * (CH[J, I] + CH[J + 1, I]),
                                      mu_a, mu_b, eta_a, kappa_a, kappa_b, delta, gamma)
            F[4, r, i] = -mu * (0.5 * (gxx - gyy)) + eta * (gxx + gyy)
            F[5, r, i] = mu * (0.5 * (gxy + gyx))
            cx = ((CH[J, I + 1] - CH[J, I - 1]) + (CH[J + 1, I + 1] - CH[J + 1, I - 1])) * hx
            cy = (CH[J + 1, I] - CH[J, I]) * idy
            F[6, r, i] = -0.5 * (cx * cx - cy * cy)
            F[7, r, i] = cx * cy
            dT = (tT - tB) * idy
            F[8, r, i] = -kap * dT
            F[9, r, i] = kap * dT * dT / (tT * tB)
    return F


@njit(**_JIT)
def rhs_rows(j0, j1, dx, dy, rho, mx, my, E, chi, theta, ux, uy, p,
             UX, UY, TH, CH, RH, PT, FP,
             mu_a, mu_b, eta_a, kappa_a, kappa_b, eps, delta, gamma,
             d_rho, d_mx, d_my, d_e, d_chi, prod):
    """Fill rows ``[j0, j1)`` of the rates and of the pointwise entropy production."""
    ny, nx = rho.shape
    idx = 1.0 / dx
    idy = 1.0 / dy
    idx2 = idx * idx
    idy2 = idy * idy
    hx = 0.5 * idx
    hy = 0.5 * idy
    X = _xfaces(j0, j1, idx, idy, rho, mx, my, E, UX, UY, TH, CH,
                mu_a, mu_b, eta_a, kappa_a, kappa_b, delta, gamma)
    Y = _yfaces(j0, j1, idx, idy, rho, mx, my, E, UX, UY, TH, CH,
                mu_a, mu_b, eta_a, kappa_a, kappa_b, delta, gamma)
    for j in range(j0, j1):
        J = j + 1
        r = j - j0
        for i in range(nx):
            I = i + 1

            # continuity
            dr = -((X[0, r, I] - X[0, r, i]) * idx + (Y[0, r + 1, i] - Y[0, r, i]) * idy)
            if eps > 0:
                rc = RH[J, I]
                dr = dr + eps * (((RH[J, I + 1] - rc) + (RH[J, I - 1] - rc)) * idx2
                                 + ((RH[J + 1, I] - rc) + (RH[J - 1, I] - rc)) * idy2)
            d_rho[j, i] = dr

            # momentum: convection, pressure, viscous stress, Korteweg force
            cx = -((X[1, r, I] - X[1, r, i]) * idx + (Y[1, r + 1, i] - Y[1, r, i]) * idy)
            vx = (X[4, r, I] - X[4, r, i]) * idx + (Y[5, r + 1, i] - Y[5, r, i]) * idy
            kx = (X[6, r, I] - X[6, r, i]) * idx + (Y[7, r + 1, i] - Y[7, r, i]) * idy
            d_mx[j, i] = (cx - (PT[J, I + 1] - PT[J, I - 1]) * hx + vx
                          + (-kx + (FP[J, I + 1] - FP[J, I - 1]) * hx))
            cy = -((X[2, r, I] - X[2, r, i]) * idx + (Y[2, r + 1, i] - Y[2, r, i]) * idy)
            vy = (X[5, r, I] - X[5, r, i]) * idx + (Y[4, r + 1, i] - Y[4, r, i]) * idy
            ky = (X[7, r, I] - X[7, r, i]) * idx + (Y[6, r + 1, i] - Y[6, r, i]) * idy
            d_my[j, i] = (cy - (PT[J + 1, I] - PT[J - 1, I]) * hy + vy
                          + (-ky + (FP[J + 1, I] - FP[J - 1, I]) * hy))

            # cell-centred velocity gradient and viscous heating
            gxx = (UX[J, I + 1] - UX[J, I - 1]) * hx
            gxy = (UX[J + 1, I] - UX[J - 1, I]) * hy
            gyx = (UY[J, I + 1] - UY[J, I - 1]) * hx
            gyy = (UY[J + 1, I] - UY[J - 1, I]) * hy
            th = theta[j, i]
            c = chi[j, i]
            mu, eta, _ = _transport(th, c, mu_a, mu_b, eta_a, 0.0, 0.0, delta, gamma)
            div = gxx + gyy
            dev = 0.5 * (gxx - gyy)
            s_xx = mu * dev + eta * div
            s_yy = -mu * dev + eta * div
            s_xy = mu * (0.5 * (gxy + gyx))
            heat = s_xx * gxx + s_xy * gxy + s_xy * gyx + s_yy * gyy

            cc = CH[J, I]
            lap_c = (((CH[J, I + 1] - cc) + (CH[J, I - 1] - cc)) * idx2
                     + ((CH[J + 1, I] - cc) + (CH[J - 1, I] - cc)) * idy2)
            chem = lap_c - (c * c * c - c)

            # internal energy
            de = (-((X[3, r, I] - X[3, r, i]) * idx + (Y[3, r + 1, i] - Y[3, r, i]) * idy)
                  - ((X[8, r, I] - X[8, r, i]) * idx + (Y[8, r + 1, i] - Y[8, r, i]) * idy)
                  - p[j, i] * div + heat + chem * chem)
            if eps > 0 and delta > 0:
                grx = (RH[J, I + 1] - RH[J, I - 1]) * hx
                gry = (RH[J + 1, I] - RH[J - 1, I]) * hy
                de = de + eps * delta * (gamma * rho[j, i] ** (gamma - 2.0) + 2.0) * (grx * grx + gry * gry)
            if delta > 0:
                de = de + delta / (th * th)
            if eps > 0:
                de = de - eps * th ** 5
            d_e[j, i] = de

            # Allen-Cahn with first-order upwind advection
            u = ux[j, i]
            v = uy[j, i]
            if u > 0:
                ax = u * (cc - CH[J, I - 1])
            else:
                ax = u * (CH[J, I + 1] - cc)
            if v > 0:
                ay = v * (cc - CH[J - 1, I])
            else:
                ay = v * (CH[J + 1, I] - cc)
            d_chi[j, i] = -(ax * idx + ay * idy) + chem

            prod[j, i] = ((heat + chem * chem) / th + 0.5 * (X[9, r, i] + X[9, r, I])
                          + 0.5 * (Y[9, r, i] + Y[9, r + 1, i]))
