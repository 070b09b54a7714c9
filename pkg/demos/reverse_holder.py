"""Reverse Hölder exponents and the self-improvement of A_q.

For each constant c the search returns the largest eps with the past
(1+eps)-power mean bounded by c times the future mean.  A weight that
satisfies such an inequality lies in A_{q-eps} for some eps > 0.
"""
import numpy as np

from parabolic_ap import Grid, ScalarField, enumerate_family, rhi_search, self_improvement

rng = np.random.default_rng(11)
grid = Grid((16, 16), (0.125, 0.0625))
family = enumerate_family(grid)
w = ScalarField(grid, np.exp(0.5 * rng.standard_normal(grid.shape)))

print("c      largest eps")
for row in rhi_search(w, [1.5, 2.0, 3.0, 5.0], family):
    print(f"{row['c']:<6} {row['eps']}")

out = self_improvement(w, 2.0, family, eps_grid=(0.05, 0.1, 0.2, 0.4))
print("\nq - eps   [w]")
for row in out["table"]:
    print(f"{2.0 - row['eps']:<9} {row['constant']:.4f}")
print("largest eps kept:", out["best_eps"])
