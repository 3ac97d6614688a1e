"""Linearization about the global Maxwellian.

Perturbations ``f`` live on the velocity lattice with ``F = m + sqrt(m) f``;
all inner products are the grid quadrature, so orthonormality defects of the
bases measure grid quality.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import VelocityGrid
from .moments import SYM_PAIRS, MacroState, compute_macro
from .operator import ModelParams, relaxation_time, shakhov_target

SQRT10 = np.sqrt(10.0)
SQRT6 = np.sqrt(6.0)


def global_maxwellian(grid: VelocityGrid) -> np.ndarray:
    return (2.0 * np.pi) ** -1.5 * np.exp(-0.5 * grid.speed2)


@dataclass(frozen=True, eq=False)
class BasisSet:
    """The 13-element moment basis ``e`` and the orthonormal 8-element ``ebar``.

    Rows are basis functions evaluated at the grid nodes.
    """

    grid: VelocityGrid
    m: np.ndarray
    sqrt_m: np.ndarray
    e: np.ndarray
    ebar: np.ndarray
    gram_ebar: np.ndarray

    def coefficients(self, f) -> np.ndarray:
        """``<f, ebar_i>`` for i = 1..8, batched over leading axes."""
        return (np.asarray(f) @ self.ebar.T) * self.grid.cell_volume

    def inner(self, f, g):
        return np.sum(np.asarray(f) * np.asarray(g), axis=-1) * self.grid.cell_volume

    def norm(self, f):
        return np.sqrt(self.inner(f, f))


@lru_cache(maxsize=8)
def build_bases(grid: VelocityGrid) -> BasisSet:
    v = grid.nodes
    v2 = grid.speed2
    m = global_maxwellian(grid)
    sm = np.sqrt(m)
    e = [sm]
    e += [v[:, i] * sm for i in range(3)]
    e += [(v[:, i] ** 2 - 1) / 2 * sm for i in range(3)]
    e += [v[:, 0] * v[:, 1] * sm, v[:, 1] * v[:, 2] * sm, v[:, 0] * v[:, 2] * sm]
    e += [(v[:, i] * v2 - 5 * v[:, i]) / SQRT10 * sm for i in range(3)]
    ebar = [sm]
    ebar += [v[:, i] * sm for i in range(3)]
    ebar += [(v2 - 3) / SQRT6 * sm]
    ebar += [(v[:, i] * v2 - 5 * v[:, i]) / SQRT10 * sm for i in range(3)]
    e = np.stack(e)
    ebar = np.stack(ebar)
    gram = ebar @ ebar.T * grid.cell_volume
    for arr in (m, sm, e, ebar, gram):
        arr.setflags(write=False)
    return BasisSet(grid, m, sm, e, ebar, gram)


def to_perturbation(F, basis: BasisSet) -> np.ndarray:
    return (np.asarray(F, dtype=float) - basis.m) / basis.sqrt_m


def from_perturbation(f, basis: BasisSet) -> np.ndarray:
    return basis.m + basis.sqrt_m * np.asarray(f, dtype=float)


def _weights(which: str, pr: float | None) -> np.ndarray:
    w = np.zeros(8)
    if which == "Pc":
        w[:5] = 1.0
    elif which == "Pnc":
        w[5:] = 1.0
    elif which == "PPr":
        if pr is None:
            raise ValueError("PPr needs a Prandtl number")
        w[:5] = 1.0
        w[5:] = 1.0 - pr
    else:
        raise ValueError(f"unknown projection {which!r}")
    return w


def project(f, which: str, basis: BasisSet, pr: float | None = None) -> np.ndarray:
    """``Pc``, ``Pnc`` or ``PPr`` (``Pc + (1 - pr) Pnc``) applied to ``f``."""
    c = basis.coefficients(f) * _weights(which, pr)
    return c @ basis.ebar


def apply_L(f, pr: float, basis: BasisSet) -> np.ndarray:
    return project(f, "PPr", basis, pr) - np.asarray(f)


def coercivity_form(f, pr: float, basis: BasisSet):
    """``(<L f, f>, bound)``.

    For ``pr > 0`` the bound is ``-min(pr, 1) |(I - Pc) f|^2`` and should sit
    above ``<L f, f>``; for ``pr = 0`` it is ``-|(I - Pc - Pnc) f|^2`` and the
    two agree.
    """
    f = np.asarray(f)
    lhs = basis.inner(apply_L(f, pr, basis), f)
    if pr > 0:
        r = f - project(f, "Pc", basis)
        bound = -min(pr, 1.0) * basis.inner(r, r)
    else:
        r = f - project(f, "Pc", basis) - project(f, "Pnc", basis)
        bound = -basis.inner(r, r)
    return lhs, bound


def gamma_residual(f, params: ModelParams, basis: BasisSet) -> np.ndarray:
    """Nonlinear remainder ``Gamma(f)`` of the perturbation equation.

    Evaluated exactly as ``(1/tau)(S(F) - F)/sqrt(m) - L f / tau0``.
    """
    f = np.asarray(f, dtype=float)
    F = from_perturbation(f, basis)
    state = compute_macro(F, basis.grid)
    S = shakhov_target(state, params.pr, basis.grid)
    nu = np.asarray(relaxation_time(state, params))
    nonlinear = nu[..., None] * (S - F) / basis.sqrt_m if f.ndim > 1 else nu * (S - F) / basis.sqrt_m
    return nonlinear - apply_L(f, params.pr, basis) / params.tau0


def first_order_consistency(f, params: ModelParams, basis: BasisSet) -> float:
    """``|(S(m + sqrt(m) f) - m)/sqrt(m) - P_Pr f| / |f|^2`` in ``L^2_v``."""
    f = np.asarray(f, dtype=float)
    F = from_perturbation(f, basis)
    S = shakhov_target(compute_macro(F, basis.grid), params.pr, basis.grid)
    num = basis.norm((S - basis.m) / basis.sqrt_m - project(f, "PPr", basis, params.pr))
    den = basis.inner(f, f)
    return float(num / den) if den > 0 else float(num)


def galerkin_L(pr: float, basis: BasisSet, degree: int = 4) -> np.ndarray:
    """Matrix of ``L_Pr`` on an orthonormal basis of ``poly(v) sqrt(m)``, deg <= ``degree``.

    The span contains all eight macroscopic modes and is invariant under
    ``L_Pr``, so the eigenvalues of this matrix are exact eigenvalues of
    the operator.
    """
    v = basis.grid.nodes
    cols = []
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                cols.append(v[:, 0] ** a * v[:, 1] ** b * v[:, 2] ** c * basis.sqrt_m)
    P = np.stack(cols, axis=1) * np.sqrt(basis.grid.cell_volume)
    Q, _ = np.linalg.qr(P)
    Q = Q.T / np.sqrt(basis.grid.cell_volume)  # rows orthonormal in the quadrature inner product
    LQ = apply_L(Q, pr, basis)
    return (LQ @ Q.T) * basis.grid.cell_volume


def kernel_dimension(pr: float, basis: BasisSet, tol: float = 1e-8) -> tuple[int, np.ndarray]:
    A = galerkin_L(pr, basis)
    lam = np.linalg.eigvalsh(0.5 * (A + A.T))
    return int(np.sum(np.abs(lam) < tol)), lam


# Jacobian of (rho, U, Theta, q) -> (rho, rho U, G, H); variable order
# (rho, U1..3, Theta11, 22, 33, 12, 23, 31, q1..3).


def _state_arrays(state: MacroState):
    rho = float(state.rho)
    if not rho > 0:
        raise ValueError("jacobian needs rho > 0")
    U = np.asarray(state.U, dtype=float)
    Th = np.asarray(state.theta_matrix, dtype=float)
    return rho, U, Th


def _abc(rho, U, Th):
    """Blocks A (3,), B (3, 3), C (3, 3) of the heat-flux rows of J."""
    trace = np.trace(Th)
    U2 = U @ U
    A = (2 * Th @ U + U * U2 + U * trace - 5 * U) / SQRT10
    B = (2 * rho * Th + 2 * rho * np.outer(U, U) + (rho * trace + rho * U2 - 5 * rho) * np.eye(3)) / SQRT10
    C = (2 * rho * np.diag(U) + rho * U[:, None] * np.ones(3)) / SQRT10
    return A, B, C


@dataclass(frozen=True)
class JacobianMatrix:
    entries: np.ndarray
    state: MacroState


def jacobian(state: MacroState) -> JacobianMatrix:
    rho, U, Th = _state_arrays(state)
    J = np.zeros((13, 13))
    J[0, 0] = 1.0
    J[1:4, 0] = U
    J[1:4, 1:4] = rho * np.eye(3)
    for i in range(3):
        J[4 + i, 0] = (Th[i, i] + U[i] ** 2 - 1) / 2
        J[4 + i, 1 + i] = rho * U[i]
        J[4 + i, 4 + i] = rho / 2
    for k, (i, j) in enumerate(SYM_PAIRS[3:]):
        J[7 + k, 0] = Th[i, j] + U[i] * U[j]
        J[7 + k, 1 + i] = rho * U[j]
        J[7 + k, 1 + j] = rho * U[i]
        J[7 + k, 7 + k] = rho
    A, B, C = _abc(rho, U, Th)
    J[10:13, 0] = A
    J[10:13, 1:4] = B
    J[10:13, 4:7] = C
    for k, (a, b) in enumerate(SYM_PAIRS[3:]):
        J[10 + a, 7 + k] = 2 * rho * U[b] / SQRT10
        J[10 + b, 7 + k] = 2 * rho * U[a] / SQRT10
    J[10:13, 10:13] = np.eye(3) / SQRT10
    return JacobianMatrix(J, state)


def jacobian_inverse(state: MacroState) -> JacobianMatrix:
    rho, U, Th = _state_arrays(state)
    Ji = np.zeros((13, 13))
    Ji[0, 0] = 1.0
    Ji[1:4, 0] = -U / rho
    Ji[1:4, 1:4] = np.eye(3) / rho
    for i in range(3):
        Ji[4 + i, 0] = (-Th[i, i] + U[i] ** 2 + 1) / rho
        Ji[4 + i, 1 + i] = -2 * U[i] / rho
        Ji[4 + i, 4 + i] = 2 / rho
    for k, (i, j) in enumerate(SYM_PAIRS[3:]):
        Ji[7 + k, 0] = (-Th[i, j] + U[i] * U[j]) / rho
        Ji[7 + k, 1 + i] = -U[j] / rho
        Ji[7 + k, 1 + j] = -U[i] / rho
        Ji[7 + k, 7 + k] = 1 / rho
    A, B, C = _abc(rho, U, Th)
    U2 = U @ U
    for i in range(3):
        off = sum(U[j] * Th[i, j] - U[j] ** 2 * U[i] for j in range(3) if j != i)
        # the sum over j covers both the B and the C terms
        Ji[10 + i, 0] = (
            2 * off
            - A[i] * SQRT10
            + SQRT10 / rho * sum(U[j] * B[i, j] + C[i, j] * (Th[j, j] - U[j] ** 2 - 1) for j in range(3))
        )
        for j in range(3):
            Ji[10 + i, 1 + j] = (
                10 * rho * U[i] * U[j]
                + 10 * rho * (U2 - 2 * U[i] ** 2) * (i == j)
                - 5 * B[i, j] * SQRT10
                + 10 * SQRT10 * U[j] * C[i, j]
            ) / (5 * rho)
            Ji[10 + i, 4 + j] = -2 * SQRT10 / rho * C[i, j]
    for k, (a, b) in enumerate(SYM_PAIRS[3:]):
        Ji[10 + a, 7 + k] = -2 * U[b]
        Ji[10 + b, 7 + k] = -2 * U[a]
    Ji[10:13, 10:13] = SQRT10 * np.eye(3)
    return JacobianMatrix(Ji, state)
