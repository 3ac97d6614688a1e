"""Seeded generators for admissible near-equilibrium states and perturbations.

Bounds (shared by the test suite and the ``verify-*`` subcommands):

* macroscopic states: rho in [0.5, 2], U in [-0.5, 0.5]^3, Theta a random
  symmetric matrix with eigenvalues in [0.5, 2], q in [-0.5, 0.5]^3;
* distributions: a local Maxwellian with rho in [0.5, 2], U in [-0.5, 0.5]^3,
  T in [0.8, 1.25], times ``1 + p`` where ``p`` is a random Hermite polynomial
  of degree <= 3 in the reduced velocity with coefficients up to 0.05.
"""
from __future__ import annotations

import numpy as np

from .grid import VelocityGrid
from .moments import MacroState


def random_states(rng: np.random.Generator, n: int) -> MacroState:
    rho = rng.uniform(0.5, 2.0, n)
    U = rng.uniform(-0.5, 0.5, (n, 3))
    Theta = np.empty((n, 3, 3))
    for k in range(n):
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        lam = rng.uniform(0.5, 2.0, 3)
        Theta[k] = (Q * lam) @ Q.T
    q = rng.uniform(-0.5, 0.5, (n, 3))
    return MacroState.from_fields(rho, U, Theta, q)


def _hermite_features(xi: np.ndarray) -> np.ndarray:
    """Degree 1..3 polynomials in the reduced velocity, shape (K, 15)."""
    x2 = np.einsum("ki,ki->k", xi, xi)
    cols = [xi[:, i] for i in range(3)]
    cols += [xi[:, 0] ** 2 - 1, xi[:, 1] ** 2 - 1, xi[:, 2] ** 2 - 1]
    cols += [xi[:, 0] * xi[:, 1], xi[:, 1] * xi[:, 2], xi[:, 2] * xi[:, 0]]
    cols += [xi[:, i] * (x2 - 5) for i in range(3)]
    cols += [xi[:, 0] * xi[:, 1] * xi[:, 2], xi[:, 0] * (xi[:, 1] ** 2 - 1), xi[:, 1] * (xi[:, 2] ** 2 - 1)]
    return np.stack(cols, axis=1)


def random_distributions(
    rng: np.random.Generator, grid: VelocityGrid, n: int, amplitude: float = 0.05
) -> np.ndarray:
    """``n`` random near-equilibrium distributions, shape ``(n, n_nodes)``."""
    from .operator import maxwellian

    rho = rng.uniform(0.5, 2.0, n)
    U = rng.uniform(-0.5, 0.5, (n, 3))
    T = rng.uniform(0.8, 1.25, n)
    state = MacroState.from_fields(rho, U, T[:, None, None] * np.eye(3), np.zeros((n, 3)))
    M = maxwellian(state, grid)
    out = np.empty_like(M)
    for k in range(n):
        xi = (grid.nodes - U[k]) / np.sqrt(T[k])
        feats = _hermite_features(xi)
        coef = rng.uniform(-amplitude, amplitude, feats.shape[1])
        out[k] = M[k] * (1.0 + feats @ coef)
    return out


def random_perturbations(rng: np.random.Generator, grid: VelocityGrid, n: int) -> np.ndarray:
    """``n`` random perturbations ``f`` with unit ``L^2_v`` norm.

    Each mixes the global-Maxwellian Hermite functions up to degree 4 with
    smooth random noise, so it has components both inside and outside the
    8-dimensional macroscopic span.
    """
    v = grid.nodes
    sqrt_m = (2 * np.pi) ** -0.75 * np.exp(-grid.speed2 / 4)
    polys = [np.ones(grid.n_nodes)]
    for a in range(5):
        for b in range(5 - a):
            for c in range(5 - a - b):
                if a + b + c:
                    polys.append(v[:, 0] ** a * v[:, 1] ** b * v[:, 2] ** c)
    P = np.stack(polys, axis=1) * sqrt_m[:, None]
    coef = rng.normal(size=(n, P.shape[1])) / np.sqrt(1.0 + np.arange(P.shape[1]))
    f = coef @ P.T
    f += 0.1 * rng.normal(size=(n, grid.n_nodes)) * sqrt_m
    norms = np.sqrt(np.sum(f * f, axis=1) * grid.cell_volume)
    return f / norms[:, None]
