"""Order of the third-moment balance residual under dt halving."""
import argparse

import numpy as np

from shakhov.config import InitialCondition, SimConfig
from shakhov.grid import build_grid
from shakhov.operator import ModelParams
from shakhov.sampling import random_distributions
from shakhov.solver import balance_from_series, run


def residual(cfg, F0=None):
    recs = run(cfg, F0=F0)
    t = [r.t for r in recs]
    lhs, rhs = balance_from_series(t, [r.third_moment for r in recs], [r.third_moment_source for r in recs])
    return np.abs(lhs - rhs).max()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pr", type=float, default=2 / 3)
    ap.add_argument("--cells", type=int, default=1, help="1 runs a homogeneous random state")
    ap.add_argument("--dts", type=float, nargs="+", default=[0.04, 0.02, 0.01, 0.005])
    ap.add_argument("--t-end", type=float, default=0.4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    grid = build_grid()
    errs = []
    for dt in args.dts:
        cfg = SimConfig(params=ModelParams(pr=args.pr), n_cells=args.cells, dt=dt, t_end=args.t_end,
                        output_every=1, ic=InitialCondition("mixed", 5e-2, 1))
        F0 = random_distributions(np.random.default_rng(args.seed), grid, 1) if args.cells == 1 else None
        errs.append(residual(cfg, F0))
        order = "" if len(errs) == 1 else f"  order {np.log2(errs[-2] / errs[-1]):.3f}"
        print(f"dt {dt:8.4f}  max |lhs - rhs| {errs[-1]:.3e}{order}")


if __name__ == "__main__":
    main()
