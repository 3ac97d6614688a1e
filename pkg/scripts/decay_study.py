"""Fitted decay rate of |f| in 1D runs across Prandtl numbers.

At Pr = 0 the run is started with zero total third moment; the norm
nevertheless levels off at a plateau of order amplitude^2 (a spatially
uniform heat flux fed by the quadratic third-moment source), which this
script reports for two amplitudes.
"""
import argparse

import numpy as np

from shakhov.cli import fit_window
from shakhov.config import InitialCondition, SimConfig
from shakhov.operator import ModelParams
from shakhov.solver import fit_decay, run


def study(pr, amplitude, n_cells, t_end):
    cfg = SimConfig(
        params=ModelParams(pr=pr), n_cells=n_cells, dt=0.02, t_end=t_end, output_every=10,
        ic=InitialCondition("mixed", amplitude, 1), enforce_third_moment_zero=pr == 0,
    ).validate()
    recs = run(cfg)
    t = np.array([r.t for r in recs])
    n = np.array([r.l2_norm_f for r in recs])
    rate, r2 = fit_decay(*fit_window(cfg, t, n))
    return rate, r2, n[-1], recs[-1].third_moment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--prs", type=float, nargs="+", default=[0.0, 0.25, 2 / 3, 1.0, 1.5])
    ap.add_argument("--cells", type=int, default=32)
    ap.add_argument("--t-end", type=float, default=30.0)
    args = ap.parse_args()
    print(f"{'Pr':>6} {'amp':>8} {'rate':>9} {'R^2':>8} {'|f(t_end)|':>11}  total third moment")
    for pr in args.prs:
        for amp in ((1e-2, 1e-3) if pr == 0 else (1e-2,)):
            rate, r2, last, third = study(pr, amp, args.cells, args.t_end)
            print(f"{pr:6.3f} {amp:8.0e} {rate:9.4f} {r2:8.4f} {last:11.3e}  {third[0]:+.3e}")


if __name__ == "__main__":
    main()
