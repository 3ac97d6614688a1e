"""Macroscopic fields (rho, U, T, Theta, q) and the derived G, H moments."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import VelocityGrid

RHO_MIN = 1e-8

# symmetric-tensor storage order: 11, 22, 33, 12, 23, 31
SYM_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0))
_SYM_INDEX = np.array([[0, 3, 5], [3, 1, 4], [5, 4, 2]])


class VacuumError(ValueError):
    """Density at or below ``RHO_MIN``; usually a sign of lost positivity."""


def sym_to_matrix(theta6):
    theta6 = np.asarray(theta6, dtype=float)
    return theta6[..., _SYM_INDEX]


def matrix_to_sym(mat):
    mat = np.asarray(mat, dtype=float)
    return np.stack([mat[..., i, j] for i, j in SYM_PAIRS], axis=-1)


@dataclass(frozen=True)
class MacroState:
    """Macroscopic fields, scalar per cell or batched along a leading axis.

    ``Theta`` uses the 6-vector layout ``(11, 22, 33, 12, 23, 31)`` and ``T``
    is always ``trace(Theta) / 3``.
    """

    rho: np.ndarray
    U: np.ndarray
    T: np.ndarray
    Theta: np.ndarray
    q: np.ndarray

    @classmethod
    def from_fields(cls, rho, U, Theta, q) -> "MacroState":
        """Build a state with ``T`` taken from the trace of ``Theta``.

        ``Theta`` may be given as a 6-vector or a 3x3 matrix.
        """
        Theta = np.asarray(Theta, dtype=float)
        if Theta.shape[-2:] == (3, 3):
            Theta = matrix_to_sym(Theta)
        T = (Theta[..., 0] + Theta[..., 1] + Theta[..., 2]) / 3.0
        return cls(np.asarray(rho, dtype=float), np.asarray(U, dtype=float), T, Theta, np.asarray(q, dtype=float))

    @classmethod
    def equilibrium(cls) -> "MacroState":
        return cls.from_fields(1.0, np.zeros(3), np.eye(3), np.zeros(3))

    @property
    def theta_matrix(self) -> np.ndarray:
        return sym_to_matrix(self.Theta)

    def cell(self, i: int) -> "MacroState":
        return MacroState(self.rho[i], self.U[i], self.T[i], self.Theta[i], self.q[i])


@dataclass(frozen=True)
class GHMoments:
    G: np.ndarray  # 6-vector, storage order of MacroState.Theta
    H: np.ndarray


@lru_cache(maxsize=8)
def raw_moment_basis(grid: VelocityGrid) -> np.ndarray:
    """Node-by-13 table of ``w_k * (1, v, v_i v_j, v_i |v|^2)``.

    Column order: 1, v1, v2, v3, then ``v_i v_j`` in the symmetric storage
    order, then ``v_i |v|^2``.
    """
    v = grid.nodes
    v2 = grid.speed2
    cols = [np.ones(grid.n_nodes), v[:, 0], v[:, 1], v[:, 2]]
    cols += [v[:, i] * v[:, j] for i, j in SYM_PAIRS]
    cols += [v[:, i] * v2 for i in range(3)]
    table = np.stack(cols, axis=1) * grid.cell_volume
    table.setflags(write=False)
    return table


def raw_moments(F, grid: VelocityGrid) -> np.ndarray:
    """``int F (1, v, v_i v_j, v_i|v|^2) dv`` for each row of ``F``."""
    return np.asarray(F, dtype=float) @ raw_moment_basis(grid)


def macro_from_raw(raw, rho_min: float = RHO_MIN) -> MacroState:
    raw = np.asarray(raw, dtype=float)
    rho = raw[..., 0]
    if np.any(~(rho > rho_min)):
        bad = np.flatnonzero(~(np.atleast_1d(rho) > rho_min))
        raise VacuumError(f"density <= {rho_min:g} in cell(s) {bad.tolist()[:10]}")
    mom = raw[..., 1:4]
    U = mom / rho[..., None]
    rhoU = rho[..., None] * U
    # rho Theta_ij = int F v_i v_j - rho U_i U_j
    second = raw[..., 4:10]
    UU = np.stack([U[..., i] * U[..., j] for i, j in SYM_PAIRS], axis=-1)
    Theta = second / rho[..., None] - UU
    T = (Theta[..., 0] + Theta[..., 1] + Theta[..., 2]) / 3.0
    trace = 3.0 * T
    U2 = np.einsum("...i,...i->...", U, U)
    ThetaU = np.einsum("...ij,...j->...i", sym_to_matrix(Theta), U)
    q = (
        raw[..., 10:13]
        - 2.0 * rho[..., None] * ThetaU
        - rhoU * U2[..., None]
        - rhoU * trace[..., None]
    )
    return MacroState(rho, U, T, Theta, q)


def compute_macro(F, grid: VelocityGrid, cell: int | None = None, rho_min: float = RHO_MIN) -> MacroState:
    """Macroscopic fields of ``F`` (shape ``(n_cells, n_nodes)`` or ``(n_nodes,)``).

    Centered moments come from one pass of raw moments expanded about ``U``.
    With ``cell`` given, only that row is evaluated.
    """
    F = np.asarray(F, dtype=float)
    if cell is not None:
        F = F[cell]
    return macro_from_raw(raw_moments(F, grid), rho_min)


def compute_gh(state: MacroState) -> GHMoments:
    rho = np.asarray(state.rho, dtype=float)
    U = np.asarray(state.U, dtype=float)
    Theta = np.asarray(state.Theta, dtype=float)
    G = np.empty_like(Theta)
    for k, (i, j) in enumerate(SYM_PAIRS):
        val = rho * Theta[..., k] + rho * U[..., i] * U[..., j]
        G[..., k] = 0.5 * (val - rho) if i == j else val
    trace = Theta[..., 0] + Theta[..., 1] + Theta[..., 2]
    U2 = np.einsum("...i,...i->...", U, U)
    ThetaU = np.einsum("...ij,...j->...i", sym_to_matrix(Theta), U)
    rhoU = rho[..., None] * U
    H = (
        np.asarray(state.q)
        + 2.0 * rho[..., None] * ThetaU
        + rhoU * U2[..., None]
        + rhoU * trace[..., None]
        - 5.0 * rhoU
    ) / np.sqrt(10.0)
    return GHMoments(G, H)
