"""Command line: ``shakhov run | verify-operator | verify-linear <config>``.

Exit status: 0 when everything passed, 1 when a check (or the solver)
failed, 2 for usage and configuration errors.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ConfigError, SimConfig, parse_config
from .grid import build_grid, integrate
from .linear import (
    apply_L,
    build_bases,
    coercivity_form,
    first_order_consistency,
    gamma_residual,
    jacobian,
    jacobian_inverse,
    kernel_dimension,
    project,
)
from .moments import MacroState, compute_macro
from .operator import cancellation_residual, maxwellian, shakhov_target
from .sampling import random_distributions, random_perturbations, random_states
from .solver import SolverFailure, balance_from_series, fit_decay, run, write_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

N_OPERATOR_STATES = 100
N_COERCIVITY = 1000
N_JACOBIAN = 100
N_GAMMA = 20


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tol: float
    where: str = ""

    @property
    def passed(self) -> bool:
        # NaN never passes
        return bool(self.residual <= self.tol)


def _worst(name, residuals, tol, seed) -> Check:
    residuals = np.asarray(residuals, dtype=float)
    if residuals.ndim > 1:
        residuals = residuals.reshape(residuals.shape[0], -1).max(axis=1)
    k = int(np.argmax(np.where(np.isnan(residuals), np.inf, residuals)))
    return Check(name, float(residuals[k]), tol, f"seed {seed}, sample {k}")


def operator_checks(config: SimConfig, seed: int) -> list[Check]:
    """Identity checks of the relaxation operator on random near-equilibrium states."""
    grid = build_grid(config.n_v, config.v_max)
    params = config.params
    rng = np.random.default_rng(seed)
    F = random_distributions(rng, grid, N_OPERATOR_STATES)
    S = shakhov_target(compute_macro(F, grid), params.pr, grid)
    D = S - F
    v = grid.nodes
    checks = [
        _worst("conservation: mass", np.abs(integrate(D, grid)), 1e-6, seed),
        _worst(
            "conservation: momentum",
            np.abs(np.stack([integrate(D * v[:, i], grid) for i in range(3)], axis=1)),
            1e-6,
            seed,
        ),
        _worst("conservation: energy", np.abs(integrate(D * grid.speed2, grid)), 1e-6, seed),
    ]
    state = compute_macro(F, grid)
    # the identity is checked relative to the size of the heat flux
    scale = 1.0 + np.linalg.norm(state.q, axis=1)
    checks.append(
        _worst(
            f"cancellation (third moment of S - F = -{params.pr:.6g} q), /(1+|q|)",
            np.abs(cancellation_residual(F, params, grid)).max(axis=1) / scale,
            1e-6,
            seed,
        )
    )
    bgk = np.abs(shakhov_target(state, 1.0, grid) - maxwellian(state, grid))
    checks.append(_worst("Pr = 1 reduces to BGK", bgk, 0.0, seed))
    eq = MacroState.from_fields(1.0, np.zeros(3), np.eye(3), np.zeros(3))
    m = maxwellian(eq, grid)
    fixed = np.abs(shakhov_target(compute_macro(m, grid), params.pr, grid) - m)
    checks.append(Check("equilibrium fixed point S(m) = m", float(fixed.max()), 1e-12, "global Maxwellian"))
    return checks


def linear_checks(config: SimConfig, seed: int) -> list[Check]:
    """Checks of the linearization: bases, projections, kernel, coercivity,
    Jacobian, nonlinear remainder and first-order consistency."""
    grid = build_grid(config.n_v, config.v_max)
    basis = build_bases(grid)
    pr = config.params.pr
    rng = np.random.default_rng(seed)
    checks = [Check("ebar orthonormality", float(np.abs(basis.gram_ebar - np.eye(8)).max()), 1e-8)]

    f = random_perturbations(rng, grid, 50)
    Pc = project(f, "Pc", basis)
    Pnc = project(f, "Pnc", basis)
    g = f[::-1]
    algebra = np.max(
        [
            np.abs(project(Pc, "Pc", basis) - Pc).max(),
            np.abs(project(Pnc, "Pnc", basis) - Pnc).max(),
            np.abs(project(Pc, "Pnc", basis)).max(),
            np.abs(basis.inner(Pc, g) - basis.inner(f, project(g, "Pc", basis))).max(),
            np.abs(basis.inner(Pnc, g) - basis.inner(f, project(g, "Pnc", basis))).max(),
        ]
    )
    checks.append(Check("projection algebra", float(algebra), 1e-10, f"seed {seed}"))

    expected = 5 if pr > 0 else 8
    dim, lam = kernel_dimension(pr, basis)
    checks.append(Check(f"kernel dimension = {expected}", float(abs(dim - expected)), 0.0, f"found {dim}"))
    allowed = np.array([0.0, -1.0, -pr])
    spread = np.min(np.abs(lam[:, None] - allowed[None, :]), axis=1)
    checks.append(Check("spectrum in {0, -1, -Pr}", float(spread.max()), 1e-8))

    samples = random_perturbations(rng, grid, N_COERCIVITY)
    lhs, bound = coercivity_form(samples, pr, basis)
    if pr > 0:
        checks.append(_worst("coercivity inequality", lhs - bound, 1e-10, seed))
    else:
        checks.append(_worst("coercivity equality (Pr = 0)", np.abs(lhs - bound), 1e-10, seed))
    sym = np.abs(basis.inner(apply_L(samples, pr, basis), samples[::-1])
                 - basis.inner(samples, apply_L(samples[::-1], pr, basis)))
    checks.append(_worst("L self-adjoint", sym, 1e-10, seed))

    states = random_states(rng, N_JACOBIAN)
    prod = [
        np.abs(jacobian(states.cell(k)).entries @ jacobian_inverse(states.cell(k)).entries - np.eye(13)).max()
        for k in range(N_JACOBIAN)
    ]
    checks.append(_worst("J J^-1 = I", prod, 1e-10, seed))
    eq = MacroState.from_fields(1.0, np.zeros(3), np.eye(3), np.zeros(3))
    diag0 = np.array([1, 1, 1, 1, 2, 2, 2, 1, 1, 1] + [math.sqrt(10)] * 3)
    Ji0 = jacobian_inverse(eq).entries
    checks.append(Check("J^-1 at equilibrium is diagonal", float(np.abs(Ji0 - np.diag(diag0)).max()), 0.0))

    fg = random_perturbations(rng, grid, N_GAMMA)
    scal = [basis.norm(gamma_residual(e * fg, config.params, basis)) / e**2 for e in (1e-2, 1e-3)]
    checks.append(_worst("Gamma quadratic scaling", np.abs(scal[0] / scal[1] - 1.0), 0.1, seed))
    gam = gamma_residual(1e-2 * fg, config.params, basis)
    checks.append(_worst("Gamma orthogonal to collision invariants", np.abs(basis.coefficients(gam)[:, :5]), 1e-8, seed))
    cons = [[first_order_consistency(e * x, config.params, basis) for x in fg] for e in (1e-2, 1e-3)]
    cons = np.asarray(cons)
    checks.append(_worst("first-order consistency constant stable", np.abs(cons[0] / cons[1] - 1.0), 0.1, seed))
    return checks


def format_report(title: str, checks: list[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [title]
    for c in checks:
        verdict = "PASS" if c.passed else "FAIL"
        lines.append(f"  {c.name:<{width}}  max residual {c.residual:.3e}  tol {c.tol:.1e}  {verdict}")
    failed = [c for c in checks if not c.passed]
    if failed:
        lines.append(f"{len(failed)} check(s) failed:")
        lines += [f"  {c.name} ({c.where})" if c.where else f"  {c.name}" for c in failed]
    else:
        lines.append("all checks passed")
    return "\n".join(lines)


# --- run summary --------------------------------------------------------------


def fit_window(config: SimConfig, t, norms):
    """Samples used for decay fits: after one transport period (the time a
    unit-speed particle needs to cross the domain; zero when homogeneous) and
    above ``1e-9`` times the initial norm, where round-off takes over."""
    t = np.asarray(t, dtype=float)
    norms = np.asarray(norms, dtype=float)
    t_start = config.domain_length if config.n_cells > 1 else 0.0
    keep = (t >= t_start) & (norms > 1e-9 * norms[0])
    return t[keep], norms[keep]


def summarize(config: SimConfig, records) -> tuple[str, bool]:
    """Human-readable run summary and the H-monotonicity / positivity verdict."""
    a, b = records[0], records[-1]
    mass_drift = abs(b.mass - a.mass) / abs(a.mass)
    mom_drift = np.abs(np.subtract(b.momentum, a.momentum)).max() / abs(a.mass)
    energy_drift = abs(b.energy - a.energy) / abs(a.energy)
    lines = [
        f"steps {config.n_steps}, dt {config.dt:g}, t_end {b.t:g}, cells {config.n_cells}, Pr {config.params.pr:.6g}",
        f"conservation drift: mass {mass_drift:.3e}, momentum {mom_drift:.3e} (relative to mass), energy {energy_drift:.3e}",
    ]
    t = [r.t for r in records]
    for label, series in (("|f|", [r.l2_norm_f for r in records]), ("max|q|", [r.max_q for r in records])):
        tw, nw = fit_window(config, t, series)
        try:
            rate, r2 = fit_decay(tw, nw)
            lines.append(f"decay fit of {label}: rate {rate:.6g}, R^2 {r2:.6f} over t in [{tw[0]:g}, {tw[-1]:g}]")
        except (ValueError, IndexError) as exc:
            lines.append(f"decay fit of {label}: not available ({exc})")
    q0, q1 = a.max_q, b.max_q
    lines.append(f"heat flux max|q|: initial {q0:.6e}, final {q1:.6e}, drift {abs(q1 - q0):.3e}")
    h = np.array([r.h_value for r in records])
    rise = float(np.max(np.diff(h))) if len(h) > 1 else 0.0
    h_ok = rise <= 1e-10
    lines.append(f"H-functional: largest increase {rise:.3e} -> {'nonincreasing' if h_ok else 'NOT nonincreasing'} (slack 1e-10)")
    min_F = min(r.min_F for r in records)
    min_S = min(r.min_S for r in records)
    pos_ok = min_F >= -1e-12 and min_S >= -1e-12
    lines.append(f"positivity: min F {min_F:.3e}, min S {min_S:.3e} -> {'ok' if pos_ok else 'VIOLATED'} (tol -1e-12)")
    if len(records) > 1:
        lhs, rhs = balance_from_series(t, [r.third_moment for r in records], [r.third_moment_source for r in records])
        lines.append(f"third-moment balance: max |lhs - rhs| {np.abs(lhs - rhs).max():.3e}")
    return "\n".join(lines), h_ok and pos_ok


# --- entry point --------------------------------------------------------------


def _load(path: str, seed: int | None, out: str | None) -> SimConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    config = parse_config(text)
    if seed is not None:
        config = replace(config, seed=seed)
    if out is not None:
        config = replace(config, output_path=out)
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shakhov", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "run the solver and write CSV diagnostics"),
        ("verify-operator", "check the relaxation-operator identities"),
        ("verify-linear", "check the linearized operator and Jacobian"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="key = value configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="CSV path (run) or report path (verify-*)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load(args.config, args.seed, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.command == "run":
        try:
            records = run(config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except SolverFailure as exc:
            if exc.records:
                write_csv(exc.records, config.output_path)
            print(f"solver failed: {exc} (last good t = {exc.t_last_good:g})", file=sys.stderr)
            return EXIT_FAIL
        write_csv(records, config.output_path)
        text, ok = summarize(config, records)
        print(text)
        print(f"diagnostics written to {config.output_path}")
        return EXIT_OK if ok else EXIT_FAIL

    if args.command == "verify-operator":
        checks = operator_checks(config, config.seed)
        title = f"verify-operator: {N_OPERATOR_STATES} states, grid {config.n_v}^3, v_max {config.v_max:g}, Pr {config.params.pr:.6g}, seed {config.seed}"
    else:
        checks = linear_checks(config, config.seed)
        title = f"verify-linear: grid {config.n_v}^3, v_max {config.v_max:g}, Pr {config.params.pr:.6g}, seed {config.seed}"
    report = format_report(title, checks)
    print(report)
    if args.out is not None:
        Path(args.out).write_text(report + "\n", encoding="utf-8")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
