"""Fused loops for the time-stepping hot path.

These mirror ``operator.shakhov_target`` and ``solver.transport_step`` but
avoid full-size temporaries; the test suite checks them against the numpy
versions.
"""
import math

import numba
import numpy as np


@numba.njit(cache=True)
def relax_stage(axis, F, rho, U, T, q, nu, pr, dt, base, w_base, out):
    """``out = w_base * base + (1 - w_base) * (F + dt * nu * (S(F) - F))``.

    ``F``, ``base`` and ``out`` have shape ``(n_cells, n, n, n)``; ``S`` is
    the Shakhov target built from the given per-cell fields.
    """
    n_cells = F.shape[0]
    n = axis.shape[0]
    ca = np.empty((3, n))
    ga = np.empty((3, n))
    for b in range(n_cells):
        Tb = T[b]
        pref = rho[b] / (2.0 * math.pi * Tb) ** 1.5
        coef = (1.0 - pr) / 5.0 / (rho[b] * Tb * Tb)
        for d in range(3):
            for i in range(n):
                c = axis[i] - U[b, d]
                ca[d, i] = c
                ga[d, i] = math.exp(-c * c / (2.0 * Tb))
        h = dt * nu[b]
        q0, q1, q2 = q[b, 0], q[b, 1], q[b, 2]
        inv2T = 1.0 / (2.0 * Tb)
        for i in range(n):
            c0 = ca[0, i]
            g0 = pref * ga[0, i]
            for j in range(n):
                c1 = ca[1, j]
                g01 = g0 * ga[1, j]
                s01 = c0 * c0 + c1 * c1
                qc01 = q0 * c0 + q1 * c1
                for k in range(n):
                    c2 = ca[2, k]
                    qc = qc01 + q2 * c2
                    S = g01 * ga[2, k] * (1.0 + coef * qc * ((s01 + c2 * c2) * inv2T - 2.5))
                    f = F[b, i, j, k]
                    val = f + h * (S - f)
                    out[b, i, j, k] = w_base * base[b, i, j, k] + (1.0 - w_base) * val
    return out


@numba.njit(cache=True)
def upwind(F, c, out):
    """First-order upwind along the cell axis; ``F`` is ``(n_cells, n, n*n)``
    and ``c[i] = v1_i dt / dx``."""
    n_cells, n, m = F.shape
    for x in range(n_cells):
        xl = x - 1 if x > 0 else n_cells - 1
        xr = x + 1 if x < n_cells - 1 else 0
        for i in range(n):
            ci = c[i]
            if ci > 0:
                for k in range(m):
                    out[x, i, k] = F[x, i, k] - ci * (F[x, i, k] - F[xl, i, k])
            else:
                for k in range(m):
                    out[x, i, k] = F[x, i, k] - ci * (F[xr, i, k] - F[x, i, k])
    return out
