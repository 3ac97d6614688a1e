"""Truncated velocity lattice and the quadrature behind every ``dv`` integral."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    """Uniform midpoint tensor lattice on ``[-v_max, v_max]^3``.

    Nodes are stored flattened in C order over ``(i1, i2, i3)``, so
    ``nodes.reshape(n, n, n, 3)`` recovers the tensor layout with the first
    velocity component varying slowest.
    """

    n_per_axis: int
    v_max: float
    axis: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.n_per_axis**3

    @property
    def spacing(self) -> float:
        return 2.0 * self.v_max / self.n_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.n_per_axis
        return (n, n, n)

    @property
    def speed2(self) -> np.ndarray:
        return np.einsum("ki,ki->k", self.nodes, self.nodes)

    def negation_index(self) -> np.ndarray:
        """Permutation ``p`` with ``nodes[p] == -nodes``."""
        n = self.n_per_axis
        idx = np.arange(self.n_nodes).reshape(n, n, n)
        return idx[::-1, ::-1, ::-1].ravel()


def build_grid(n_per_axis: int = 24, v_max: float = 8.0) -> VelocityGrid:
    if n_per_axis != int(n_per_axis):
        raise GridError("n_per_axis must be an integer")
    n_per_axis = int(n_per_axis)
    if n_per_axis % 2:
        raise GridError(f"odd node count {n_per_axis}: the lattice must be symmetric under v -> -v")
    if n_per_axis < 8:
        raise GridError(f"n_per_axis={n_per_axis} < 8 under-resolves the Gaussian")
    if not v_max >= 4:
        raise GridError(f"v_max={v_max} < 4 truncates the Gaussian tail")
    h = 2.0 * v_max / n_per_axis
    axis = -v_max + h * (np.arange(n_per_axis) + 0.5)
    # exact antisymmetry, independent of rounding in the affine map above
    half = n_per_axis // 2
    axis[:half] = -axis[::-1][:half]
    g1, g2, g3 = np.meshgrid(axis, axis, axis, indexing="ij")
    nodes = np.stack([g1.ravel(), g2.ravel(), g3.ravel()], axis=1)
    weights = np.full(n_per_axis**3, h**3)
    for arr in (axis, nodes, weights):
        arr.setflags(write=False)
    return VelocityGrid(n_per_axis, float(v_max), axis, nodes, weights)


def integrate(values, grid: VelocityGrid, compensated: bool = False):
    """Quadrature of per-node values, ``sum_k w_k values[..., k]``.

    The last axis of ``values`` runs over the nodes. Summation is numpy's
    pairwise reduction in ascending node order, which is fixed for a given
    array length; ``compensated=True`` switches to ``math.fsum`` (1D input
    only) for a correctly rounded sum.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != grid.n_nodes:
        raise GridError(f"field length {values.shape[-1]} does not match {grid.n_nodes} nodes")
    if compensated:
        if values.ndim != 1:
            raise GridError("compensated summation takes a single field")
        return grid.cell_volume * math.fsum(values.tolist())
    # uniform rule: one weight factors out of the sum
    return grid.cell_volume * np.sum(values, axis=-1)


def inner(f, g, grid: VelocityGrid):
    """``<f, g>_{L^2_v}`` by the grid quadrature."""
    return integrate(np.asarray(f) * np.asarray(g), grid)
