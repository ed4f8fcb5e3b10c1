#!/usr/bin/env python3
"""Grid refinement study for the growth rate and the simulated totals.

For one of the built-in examples, computes the characteristic root and the
final total population on a ladder of grids and prints the successive
differences, giving an empirical convergence order.

Usage:
    python scripts/convergence_study.py --id 2 --levels 4
"""

import argparse

import numpy as np

from clonal_evolve import model, solver, spectral


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--id", type=int, choices=(1, 2, 3), default=2)
    ap.add_argument("--levels", type=int, default=4,
                    help="number of refinement levels")
    ap.add_argument("--base-age", type=int, default=31,
                    help="age nodes on the coarsest level (refined as 2n-1)")
    ap.add_argument("--base-len", type=int, default=26)
    args = ap.parse_args()

    n_age, n_len = args.base_age, args.base_len
    rows = []
    for level in range(args.levels):
        grid = model.Grid(n_age, n_len, 6.0, 1.0)
        scenario = model.example_scenario(args.id, grid)
        lam = spectral.growth_rate(scenario.coefficients, scenario.kernel)
        total = solver.simulate(scenario).totals[-1]
        rows.append((n_age, n_len, lam, total))
        print(f"n_age={n_age:5d} n_len={n_len:4d} "
              f"lambda*={lam:+.8f} P(T)={total:.8g}")
        n_age, n_len = 2 * n_age - 1, 2 * n_len - 1

    if len(rows) >= 3:
        lam_d = np.abs(np.diff([r[2] for r in rows]))
        tot_d = np.abs(np.diff([r[3] for r in rows]))
        with np.errstate(divide="ignore", invalid="ignore"):
            print("lambda* difference ratios:",
                  np.array2string(lam_d[:-1] / lam_d[1:], precision=2))
            print("P(T) difference ratios:   ",
                  np.array2string(tot_d[:-1] / tot_d[1:], precision=2))
        print("(a ratio near 4 indicates second-order convergence)")


if __name__ == "__main__":
    main()
