#!/usr/bin/env python3
"""Sweep the exponent p at fixed budget and watch the potential reshape.

Large p pushes V~ toward the constant potential (p = inf exactly constant,
lambda = lambda_1(0) + A); p near 1 concentrates the budget near the peak
of the ground state, approaching the p = 1 coincidence-set picture.
"""

import argparse
import math

import numpy as np

from extremal_eigen import LpBudget, SolveOptions, build_path, solve_p_gt_1, solve_p_inf

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("-n", type=int, default=31)
parser.add_argument("-A", type=float, default=1.0)
args = parser.parse_args()

space, spec = build_path(args.n, grounded_ends=True)
print(f"grounded {args.n}-path, A = {args.A}")
print(f"{'p':>8} {'lambda':>12} {'|V|_inf':>10} {'V heavy set':>12} {'iters':>6}")

for p in (1.05, 1.2, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0):
    res = solve_p_gt_1(space, spec, LpBudget(p, args.A),
                       SolveOptions(uniqueness_probe=False))
    heavy = int(np.sum(res.V >= 0.5 * np.max(res.V)))
    print(f"{p:8.3g} {res.lam:12.6g} {np.max(res.V):10.4g} {heavy:12d} "
          f"{res.iterations:6d}")

res = solve_p_inf(space, spec, LpBudget(math.inf, args.A))
print(f"{'inf':>8} {res.lam:12.6g} {np.max(res.V):10.4g} "
      f"{int(np.sum(res.V > 0)):12d} {res.iterations:6d}")
