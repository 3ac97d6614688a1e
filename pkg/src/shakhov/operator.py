"""Local Maxwellian, Shakhov relaxation target, relaxation time, H-functional."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import VelocityGrid, integrate
from .moments import MacroState, compute_macro

H_FLOOR = 1e-30
POSITIVITY_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Prandtl number and the collision-frequency law ``1/tau = rho^eta T^w / tau0``."""

    pr: float = 2.0 / 3.0
    tau0: float = 1.0
    eta: float = 1.0
    w: float = 0.5

    def __post_init__(self):
        if not self.pr >= 0:
            raise ValueError(f"pr must be >= 0, got {self.pr}")
        if not self.tau0 > 0:
            raise ValueError(f"tau0 must be > 0, got {self.tau0}")
        if not self.eta >= 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")


def _shifted_axes(state: MacroState, grid: VelocityGrid):
    """Per-cell ``v_i - U_i`` along each lattice axis, shape ``(B, 3, n)``."""
    U = np.atleast_2d(np.asarray(state.U, dtype=float))
    return grid.axis[None, None, :] - U[:, :, None]


def _outer_sum(a, b, c, op):
    """Combine per-axis factors ``(B, n)`` into ``(B, n, n, n)`` with ``op``."""
    ab = op(a[:, :, None, None], b[:, None, :, None])
    return op(ab, c[:, None, None, :])


def _gaussian(state: MacroState, grid: VelocityGrid, c: np.ndarray) -> np.ndarray:
    rho = np.atleast_1d(np.asarray(state.rho, dtype=float))
    T = np.atleast_1d(np.asarray(state.T, dtype=float))
    if np.any(~(T > 0)):
        raise ValueError("maxwellian needs T > 0")
    if np.any(~(rho > 0)):
        raise ValueError("maxwellian needs rho > 0")
    g = np.exp(-(c**2) / (2.0 * T[:, None, None]))
    g[:, 0] *= (rho / (2.0 * np.pi * T) ** 1.5)[:, None]
    return _outer_sum(g[:, 0], g[:, 1], g[:, 2], np.multiply)


def maxwellian(state: MacroState, grid: VelocityGrid) -> np.ndarray:
    """``rho (2 pi T)^{-3/2} exp(-|v-U|^2 / 2T)`` at every node.

    The Gaussian is separable on the tensor lattice, so it is built from
    three 1D exponentials per cell.
    """
    c = _shifted_axes(state, grid)
    M = _gaussian(state, grid, c).reshape(c.shape[0], -1)
    return M if np.ndim(state.rho) else M[0]


def shakhov_target(state: MacroState, pr: float, grid: VelocityGrid) -> np.ndarray:
    """Shakhov distribution built from given macroscopic fields."""
    c = _shifted_axes(state, grid)
    M = _gaussian(state, grid, c)
    if pr != 1:
        rho = np.atleast_1d(np.asarray(state.rho, dtype=float))
        T = np.atleast_1d(np.asarray(state.T, dtype=float))
        q = np.atleast_2d(np.asarray(state.q, dtype=float))
        qc = _outer_sum(*(q[:, i, None] * c[:, i] for i in range(3)), np.add)
        # |v - U|^2 / 2T - 5/2
        shape = c**2 / (2.0 * T[:, None, None])
        shape[:, 0] -= 2.5
        qc *= _outer_sum(shape[:, 0], shape[:, 1], shape[:, 2], np.add)
        qc *= (((1.0 - pr) / 5.0) / (rho * T**2))[:, None, None, None]
        qc += 1.0
        M *= qc
    S = M.reshape(c.shape[0], -1)
    return S if np.ndim(state.rho) else S[0]


def shakhov_apply(F, params: ModelParams, grid: VelocityGrid) -> np.ndarray:
    """``S_Pr(F)`` cellwise; ``Pr = 1`` returns the local Maxwellian itself."""
    state = compute_macro(F, grid)
    return shakhov_target(state, params.pr, grid)


def relaxation_time(state: MacroState, params: ModelParams):
    """Collision frequency ``1/tau`` (the reciprocal, despite the name)."""
    rho = np.asarray(state.rho, dtype=float)
    T = np.asarray(state.T, dtype=float)
    if np.any(~(rho > 0)) or np.any(~(T > 0)):
        raise ValueError("relaxation_time needs rho > 0 and T > 0")
    return rho**params.eta * T**params.w / params.tau0


def centered_third_moment(F, state: MacroState, grid: VelocityGrid) -> np.ndarray:
    """``int F (v_i - U_i)|v - U|^2 dv`` by direct quadrature of the shifted integrand."""
    F = np.atleast_2d(F)
    U = np.atleast_2d(np.asarray(state.U, dtype=float))
    c = grid.nodes[None, :, :] - U[:, None, :]
    c2 = np.einsum("bki,bki->bk", c, c)
    out = integrate(F[:, None, :] * np.moveaxis(c, 2, 1) * c2[:, None, :], grid)
    return out if np.ndim(state.rho) else out[0]


def cancellation_residual(F, params: ModelParams, grid: VelocityGrid) -> np.ndarray:
    """``int (S - F)(v_i - U_i)|v - U|^2 dv + Pr q_i`` per cell; zero in exact arithmetic."""
    state = compute_macro(F, grid)
    S = shakhov_target(state, params.pr, grid)
    return centered_third_moment(np.asarray(S) - F, state, grid) + params.pr * np.asarray(state.q)


def h_functional(F, grid: VelocityGrid, dx: float = 1.0) -> float:
    """``sum_cells dx * int F ln F dv`` with ``F`` clamped below at ``H_FLOOR``."""
    Fc = np.maximum(np.atleast_2d(F), H_FLOOR)
    return float(dx * np.sum(integrate(Fc * np.log(Fc), grid)))


@dataclass(frozen=True)
class PositivityReport:
    min_F: float
    min_S: float
    argmin_F: tuple[int, int]  # (cell, node)
    argmin_S: tuple[int, int]

    @property
    def flagged(self) -> bool:
        return self.min_F < -POSITIVITY_TOL or self.min_S < -POSITIVITY_TOL


def positivity_report(F, S) -> PositivityReport:
    F = np.atleast_2d(F)
    S = np.atleast_2d(S)
    kF = np.unravel_index(np.argmin(F), F.shape)
    kS = np.unravel_index(np.argmin(S), S.shape)
    return PositivityReport(
        float(F[kF]), float(S[kS]), (int(kF[0]), int(kF[1])), (int(kS[0]), int(kS[1]))
    )
