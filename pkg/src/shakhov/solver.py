"""Time integration on a periodic interval in x with full 3D velocity.

One step is the Strang composition transport(dt/2), relaxation(dt),
transport(dt/2). Transport is first-order upwind along x1; relaxation is
two-stage SSP-RK2 on ``dF/dt = (S(F) - F) / tau(F)`` cell by cell.
"""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from . import _kernels
from .config import ConfigError, SimConfig, parse_config, render_config
from .grid import VelocityGrid, build_grid, integrate
from .linear import BasisSet, build_bases, from_perturbation, project, to_perturbation
from .moments import MacroState, compute_macro, raw_moments, sym_to_matrix
from .operator import ModelParams, h_functional, relaxation_time, shakhov_target

CHECKPOINT_FORMAT = "shakhov-checkpoint/1"


class StepError(RuntimeError):
    pass


class SolverFailure(RuntimeError):
    """A step failed; ``records`` holds every diagnostic written before it."""

    def __init__(self, message, records, t_last_good):
        super().__init__(message)
        self.records = records
        self.t_last_good = t_last_good


# --- single steps -----------------------------------------------------------


def transport_step(F, dt: float, grid: VelocityGrid, n_cells: int, domain_length: float) -> np.ndarray:
    """Upwind update of ``dF/dt + v1 dF/dx = 0`` with periodic wrap."""
    F = np.asarray(F, dtype=float)
    if n_cells == 1:
        return F.copy()
    dx = domain_length / n_cells
    n = grid.n_per_axis
    c = grid.axis * dt / dx
    if np.max(np.abs(c)) > 1.0:
        raise StepError(f"CFL violation: |v1| dt/dx = {np.max(np.abs(c)):.4g} > 1")
    G = np.ascontiguousarray(F).reshape(n_cells, n, n * n)
    return _kernels.upwind(G, c, np.empty_like(G)).reshape(F.shape)


def collision_rate(F, params: ModelParams, grid: VelocityGrid):
    """``((S(F) - F)/tau(F), 1/tau(F))`` per cell."""
    state = compute_macro(F, grid)
    S = shakhov_target(state, params.pr, grid)
    nu = np.atleast_1d(relaxation_time(state, params))
    return nu[:, None] * (S - F), nu


def relaxation_step(F, dt: float, params: ModelParams, grid: VelocityGrid) -> np.ndarray:
    """Heun (SSP-RK2) step of the cellwise relaxation ODE."""
    F = np.ascontiguousarray(np.atleast_2d(F), dtype=float)
    shape = (F.shape[0],) + grid.shape
    F0 = F.reshape(shape)
    state = compute_macro(F, grid)
    nu = np.atleast_1d(relaxation_time(state, params))
    if np.max(nu) * dt > 0.5:
        raise StepError(f"relaxation stability violated: dt = {dt} > 0.5 tau_min = {0.5 / np.max(nu):.4g}")
    F1 = _stage(F0, state, nu, params.pr, dt, F0, 0.0, grid)
    state1 = compute_macro(F1.reshape(F.shape), grid)
    nu1 = np.atleast_1d(relaxation_time(state1, params))
    return _stage(F1, state1, nu1, params.pr, dt, F0, 0.5, grid).reshape(F.shape)


def _stage(F, state, nu, pr, dt, base, w_base, grid):
    return _kernels.relax_stage(
        grid.axis, F, np.atleast_1d(state.rho), np.atleast_2d(state.U), np.atleast_1d(state.T),
        np.atleast_2d(state.q), nu, float(pr), float(dt), base, float(w_base), np.empty_like(F),
    )


class Solver:
    """Bundles grid, bases and parameters for repeated stepping."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.params = config.params
        self.grid = build_grid(config.n_v, config.v_max)
        self.basis = build_bases(self.grid)
        self.n_cells = config.n_cells
        self.dx = config.dx
        self.x = (np.arange(self.n_cells) + 0.5) * config.domain_length / self.n_cells if self.n_cells > 1 else np.zeros(1)

    def transport(self, F, dt):
        return transport_step(F, dt, self.grid, self.n_cells, self.config.domain_length)

    def step(self, F, dt):
        F = self.transport(F, 0.5 * dt)
        F = relaxation_step(F, dt, self.params, self.grid)
        return self.transport(F, 0.5 * dt)

    def initial_state(self) -> np.ndarray:
        return initial_condition(self.config, self.grid, self.basis, self.x, self.dx)


# --- initial data -----------------------------------------------------------


def initial_condition(config: SimConfig, grid: VelocityGrid, basis: BasisSet, x, dx: float) -> np.ndarray:
    """Initial distribution for the parameterized families.

    Families with Maxwellian modes have the spatial mean of their
    conservative projection removed, so total mass, momentum and energy equal
    those of the global Maxwellian and the run relaxes towards ``m``.
    """
    ic = config.ic
    a = ic.amplitude
    k = 2 * np.pi * ic.mode / config.domain_length
    n = len(x)
    f = np.zeros((n, grid.n_nodes))
    if ic.kind in ("maxwellian", "mixed"):
        s = np.sin(k * x)
        rho = 1 + a * s
        U = np.zeros((n, 3))
        U[:, 0] = a * s
        T = 1 + a * s
        state = MacroState.from_fields(rho, U, T[:, None, None] * np.eye(3), np.zeros((n, 3)))
        f += to_perturbation(shakhov_target(state, 1.0, grid), basis)
        f -= project(f, "Pc", basis).mean(axis=0)
    if ic.kind in ("heat_flux", "mixed"):
        f += a * np.cos(k * x)[:, None] * basis.ebar[5][None, :]
    if config.enforce_third_moment_zero:
        f = remove_total_third_moment(f, basis, dx)
    F = from_perturbation(f, basis)
    state = compute_macro(F, grid, rho_min=0.0)
    bad = np.flatnonzero(~((state.rho > 0) & (state.T > 0)))
    if bad.size:
        raise ConfigError(
            f"ic.amplitude = {a} gives a non-physical initial state (rho or T <= 0 in cells {bad.tolist()[:10]})"
        )
    return F


def remove_total_third_moment(f, basis: BasisSet, dx: float) -> np.ndarray:
    """Subtract a spatially uniform multiple of ``ebar_6..8`` so that the
    total ``int int F v_i |v|^2`` vanishes; mass, momentum and energy are
    untouched since those modes are orthogonal to the collision invariants.
    """
    grid = basis.grid
    F = from_perturbation(f, basis)
    total = dx * raw_moments(F, grid)[:, 10:13].sum(axis=0)
    v = grid.nodes
    per_mode = np.array(
        [integrate(basis.ebar[5 + i] * basis.sqrt_m * v[:, i] * grid.speed2, grid) for i in range(3)]
    )
    length = dx * f.shape[0]
    coef = total / (length * per_mode)
    return f - coef @ basis.ebar[5:8]


# --- diagnostics ------------------------------------------------------------


@dataclass(frozen=True)
class MicroMacroCoeffs:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray


def micro_macro_coeffs(f, basis: BasisSet) -> MicroMacroCoeffs:
    """Coefficients of ``P_Pr f`` in ``sqrt(m) * (1, v, |v|^2, v|v|^2)``, per cell."""
    f = np.asarray(f, dtype=float)
    grid = basis.grid
    v = grid.nodes
    v2 = grid.speed2
    fs = f * basis.sqrt_m
    mass = integrate(fs, grid)
    energy = integrate(fs * (v2 - 3), grid)
    mom = np.stack([integrate(fs * v[:, i], grid) for i in range(3)], axis=-1)
    flux = np.stack([integrate(fs * v[:, i] * (v2 - 5), grid) for i in range(3)], axis=-1)
    return MicroMacroCoeffs(
        a=mass - 0.5 * energy,
        b=mom - 0.5 * flux,
        c=energy / 6.0,
        d=flux / 10.0,
    )


def third_moment_source(F, params: ModelParams, grid: VelocityGrid, dx: float = 1.0) -> np.ndarray:
    """``sum_x dx (1/tau)(-Pr q_i + 2 U_i rho T - 2 rho (Theta U)_i)``.

    This is the rate of change of the total ``int int F v_i |v|^2`` implied by
    the relaxation term; transport contributes nothing on a periodic domain.
    """
    state = compute_macro(np.atleast_2d(F), grid)
    nu = relaxation_time(state, params)
    rho = state.rho[:, None]
    ThetaU = np.einsum("cij,cj->ci", sym_to_matrix(state.Theta), state.U)
    local = -params.pr * state.q + 2 * state.U * rho * state.T[:, None] - 2 * rho * ThetaU
    return dx * np.sum(nu[:, None] * local, axis=0)


def third_moment_balance(snapshots, params: ModelParams, grid: VelocityGrid, dx: float = 1.0):
    """Check the total third-moment evolution law between consecutive snapshots.

    ``snapshots`` is a sequence of ``(t, F)``. For each interval the left side
    is the difference quotient of the total ``int int F v_i|v|^2`` and the
    right side is the trapezoid average of :func:`third_moment_source`; both
    agree to second order in the interval length.
    """
    if len(snapshots) < 2:
        raise ValueError("third_moment_balance needs at least two snapshots")
    t = np.array([s[0] for s in snapshots], dtype=float)
    M = np.array([dx * raw_moments(np.atleast_2d(F), grid)[:, 10:13].sum(axis=0) for _, F in snapshots])
    src = np.array([third_moment_source(F, params, grid, dx) for _, F in snapshots])
    return balance_from_series(t, M, src)


def balance_from_series(t, third_moment, source):
    t = np.asarray(t, dtype=float)
    third_moment = np.asarray(third_moment, dtype=float)
    source = np.asarray(source, dtype=float)
    lhs = np.diff(third_moment, axis=0) / np.diff(t)[:, None]
    rhs = 0.5 * (source[1:] + source[:-1])
    return lhs, rhs


class EnergyTracker:
    """Instant energy and time-integrated production of a sampled history.

    Uses ``f``, the central difference in x (periodic) and the backward
    difference in t; the time difference is zero at the first sample.
    """

    def __init__(self, dx: float, grid: VelocityGrid):
        self.dx = dx
        self.grid = grid
        self.prev = None  # (t, f, density)
        self.production = 0.0

    def _sq(self, g) -> float:
        return float(self.dx * np.sum(g * g) * self.grid.cell_volume)

    def update(self, t: float, f) -> tuple[float, float]:
        f = np.atleast_2d(np.asarray(f, dtype=float))
        total = self._sq(f)
        if f.shape[0] > 1:
            total += self._sq((np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2 * self.dx))
        if self.prev is not None:
            t0, f0, dens0 = self.prev
            total += self._sq((f - f0) / (t - t0))
            self.production += 0.5 * (t - t0) * (total + dens0)
        self.prev = (t, f, total)
        return 0.5 * total, self.production


def energy_functional(history, grid: VelocityGrid, dx: float = 1.0) -> tuple[float, float]:
    """``(instant, production_integral)`` at the last entry of ``history``.

    ``history`` is a nonempty sequence of ``(t, f)``.
    """
    history = list(history)
    if not history:
        raise ValueError("energy_functional needs a nonempty history")
    tracker = EnergyTracker(dx, grid)
    out = (0.0, 0.0)
    for t, f in history:
        out = tracker.update(t, f)
    return out


def fit_decay(t, norms, t_start: float | None = None) -> tuple[float, float]:
    """Least-squares line through ``(t, log norm)``; returns ``(-slope, R^2)``."""
    t = np.asarray(t, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if t_start is not None:
        keep = t >= t_start
        t, norms = t[keep], norms[keep]
    if len(t) < 10:
        raise ValueError(f"degenerate fit window: {len(t)} samples < 10")
    if np.any(~(norms > 1e-14)):
        raise ValueError("degenerate fit window: norms must exceed 1e-14")
    y = np.log(norms)
    A = np.stack([t, np.ones_like(t)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * t + icpt)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), float(r2)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    momentum: tuple
    energy: float
    third_moment: tuple
    l2_norm_f: float
    energy_instant: float
    energy_production: float
    h_value: float
    min_F: float
    min_S: float
    max_drho: float
    max_U: float
    max_dTheta: float
    max_q: float
    a: float
    b: tuple
    c: float
    d: tuple
    max_abs_a: float
    max_abs_b: float
    max_abs_c: float
    max_abs_d: float
    third_moment_source: tuple

    @classmethod
    def csv_header(cls) -> list[str]:
        cols = []
        for f in fields(cls):
            if f.type == "tuple":
                cols += [f"{f.name}_{i}" for i in (1, 2, 3)]
            else:
                cols.append(f.name)
        return cols

    def csv_row(self) -> list[str]:
        out = []
        for val in astuple(self):
            vals = val if isinstance(val, tuple) else (val,)
            out += [f"{float(x):.17g}" for x in vals]
        return out

    @classmethod
    def from_csv_row(cls, row) -> "DiagnosticsRecord":
        vals = [float(x) for x in row]
        args, k = [], 0
        for f in fields(cls):
            if f.type == "tuple":
                args.append(tuple(vals[k : k + 3]))
                k += 3
            else:
                args.append(vals[k])
                k += 1
        return cls(*args)


def diagnose(F, t: float, solver: Solver, tracker: EnergyTracker) -> DiagnosticsRecord:
    grid, basis, dx, params = solver.grid, solver.basis, solver.dx, solver.params
    F = np.atleast_2d(F)
    raw = raw_moments(F, grid)
    state = compute_macro(F, grid)
    S = shakhov_target(state, params.pr, grid)
    f = to_perturbation(F, basis)
    inst, prod = tracker.update(t, f)
    mm = micro_macro_coeffs(f, basis)
    totals = dx * raw.sum(axis=0)
    vec = lambda a: tuple(float(x) for x in a)
    return DiagnosticsRecord(
        t=float(t),
        mass=float(totals[0]),
        momentum=vec(totals[1:4]),
        energy=float(totals[4] + totals[5] + totals[6]),
        third_moment=vec(totals[10:13]),
        l2_norm_f=float(np.sqrt(dx * np.sum(f * f) * grid.cell_volume)),
        energy_instant=inst,
        energy_production=prod,
        h_value=h_functional(F, grid, dx),
        min_F=float(F.min()),
        min_S=float(S.min()),
        max_drho=float(np.max(np.abs(state.rho - 1))),
        max_U=float(np.max(np.linalg.norm(state.U, axis=1))),
        max_dTheta=float(np.max(np.abs(state.Theta - np.array([1, 1, 1, 0, 0, 0])))),
        max_q=float(np.max(np.linalg.norm(state.q, axis=1))),
        a=float(dx * mm.a.sum()),
        b=vec(dx * mm.b.sum(axis=0)),
        c=float(dx * mm.c.sum()),
        d=vec(dx * mm.d.sum(axis=0)),
        max_abs_a=float(np.max(np.abs(mm.a))),
        max_abs_b=float(np.max(np.abs(mm.b))),
        max_abs_c=float(np.max(np.abs(mm.c))),
        max_abs_d=float(np.max(np.abs(mm.d))),
        third_moment_source=vec(third_moment_source(F, params, grid, dx)),
    )


# --- driver -----------------------------------------------------------------


def run(config: SimConfig, F0=None, callback=None) -> list[DiagnosticsRecord]:
    """Advance to ``t_end``, recording diagnostics every ``output_every`` steps.

    ``callback(step, t, F)`` (optional) sees each recorded state. A failing
    step raises :class:`SolverFailure` carrying the records so far.
    """
    config.validate()
    solver = Solver(config)
    F = solver.initial_state() if F0 is None else np.atleast_2d(np.array(F0, dtype=float))
    tracker = EnergyTracker(solver.dx, solver.grid)
    records = [diagnose(F, 0.0, solver, tracker)]
    if callback is not None:
        callback(0, 0.0, F)
    dt = config.dt
    t = 0.0
    for n in range(1, config.n_steps + 1):
        try:
            F = solver.step(F, dt)
            if not np.all(np.isfinite(F)):
                raise StepError("non-finite values in F")
        except Exception as exc:  # abort with the last good record
            raise SolverFailure(f"step {n} failed at t = {t:.6g}: {exc}", records, t) from exc
        t = n * dt
        if n % config.output_every == 0 or n == config.n_steps:
            records.append(diagnose(F, t, solver, tracker))
            if callback is not None:
                callback(n, t, F)
    return records


def write_csv(records, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DiagnosticsRecord.csv_header())
        for rec in records:
            writer.writerow(rec.csv_row())


def read_csv(path) -> list[DiagnosticsRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != DiagnosticsRecord.csv_header():
            raise ValueError("unexpected diagnostics header")
        return [DiagnosticsRecord.from_csv_row(row) for row in reader]


def save_checkpoint(path, config: SimConfig, t: float, F) -> None:
    """Write ``(format tag, rendered config, t, F)`` as an ``.npz`` archive.

    Arrays: ``format`` (str), ``config`` (str, ``key = value`` text),
    ``t`` (float64 scalar), ``values`` (float64, ``(n_cells, n_v**3)``, nodes
    in C order over the three velocity axes).
    """
    np.savez(
        path,
        format=np.array(CHECKPOINT_FORMAT),
        config=np.array(render_config(config)),
        t=np.float64(t),
        values=np.atleast_2d(np.asarray(F, dtype=np.float64)),
    )


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as data:
        tag = str(data["format"])
        if tag != CHECKPOINT_FORMAT:
            raise ValueError(f"unsupported checkpoint format {tag!r}")
        return parse_config(str(data["config"])), float(data["t"]), data["values"].copy()
