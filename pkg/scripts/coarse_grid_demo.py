"""Operator identity residuals as the velocity lattice is refined."""
import argparse

from shakhov.cli import operator_checks
from shakhov.config import SimConfig
from shakhov.operator import ModelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pr", type=float, default=2 / 3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    lattices = [(8, 4.0), (12, 6.0), (16, 6.0), (24, 8.0), (32, 8.0), (32, 10.0)]
    rows = []
    for n, vmax in lattices:
        checks = operator_checks(SimConfig(params=ModelParams(pr=args.pr), n_v=n, v_max=vmax), args.seed)
        rows.append((n, vmax, checks))
    names = [c.name.split(" (")[0] for c in rows[0][2]]
    print(f"{'lattice':>10}  " + "  ".join(f"{nm[:22]:>22}" for nm in names))
    for n, vmax, checks in rows:
        print(f"{n:>4}^3 {vmax:4.0f}  " + "  ".join(f"{c.residual:>22.2e}" for c in checks))


if __name__ == "__main__":
    main()
