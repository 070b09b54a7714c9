"""Forward and backward maximal functions, and the A_1 test they give.

A weight is in the one-sided A_1 class when the backward maximal function
is controlled by the weight itself.  The ratio M^- w / w is therefore a
cheap lower bound for the A_1 constant.
"""
import numpy as np

from parabolic_ap import (Grid, ScalarField, a1_constant, a1_via_maximal, enumerate_family,
                          maximal_backward, maximal_forward, time_reverse)

rng = np.random.default_rng(3)
grid = Grid((16, 16), (0.125, 0.0625))
family = enumerate_family(grid)

spike = np.zeros(grid.shape)
spike[8, 8] = 1.0
f = ScalarField(grid, spike)
back, fwd = maximal_backward(f, family), maximal_forward(f, family)
# the backward operator spreads mass into the future, the forward one into the past
print("time slices reached by the spike")
print("  backward:", np.flatnonzero(np.nan_to_num(back.values[8]) > 0))
print("  forward: ", np.flatnonzero(np.nan_to_num(fwd.values[8]) > 0))

mirror = maximal_backward(time_reverse(f), family.reflect_time())
same = np.array_equal(fwd.values[fwd.covered], mirror.values[..., ::-1][fwd.covered])
print("forward == reversed backward on reversed data:", same)

for name, w in (("nondecreasing in t", ScalarField(grid, np.broadcast_to(
                    np.linspace(1, 3, 16), grid.shape).copy())),
                ("lognormal", ScalarField(grid, np.exp(0.7 * rng.standard_normal(grid.shape))))):
    print(f"\n{name}")
    print(f"  A_1 constant           {a1_constant(w, family).value:.4f}")
    print(f"  sup M^- w / w (bound)  {a1_via_maximal(w, family).value:.4f}")
