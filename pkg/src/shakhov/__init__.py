"""Discrete-velocity solver and identity checks for the Shakhov relaxation model."""
from .config import ConfigError, InitialCondition, SimConfig, parse_config, render_config
from .grid import GridError, VelocityGrid, build_grid, inner, integrate
from .linear import BasisSet, build_bases, jacobian, jacobian_inverse
from .moments import MacroState, VacuumError, compute_gh, compute_macro
from .operator import ModelParams, maxwellian, relaxation_time, shakhov_apply, shakhov_target
from .solver import DiagnosticsRecord, Solver, SolverFailure, run

__all__ = [
    "BasisSet", "ConfigError", "DiagnosticsRecord", "GridError", "InitialCondition",
    "MacroState", "ModelParams", "SimConfig", "Solver", "SolverFailure", "VacuumError",
    "VelocityGrid", "build_bases", "build_grid", "compute_gh", "compute_macro", "inner",
    "integrate", "jacobian", "jacobian_inverse", "maxwellian", "parse_config",
    "relaxation_time", "render_config", "run", "shakhov_apply", "shakhov_target",
]
