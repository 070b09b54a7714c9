"""How the A_2 constant of e^{t} and e^{-t} depends on the rectangle scale.

For exponentials in time the per-rectangle functional depends only on the
time half-length l = L^2, so the whole family collapses onto a few numbers
that can be compared against closed forms.
"""
import math

import numpy as np

from parabolic_ap import Grid, RectangleFamily, ScalarField, aq_constant, enumerate_family

grid = Grid((1, 4096), (1.0, 2.0 ** -11), (-0.5, -1.0))
family = enumerate_family(grid, RectangleFamily(L_min=2.0 ** -3, ratio=2.0, stride_x=1.0))
print(f"{len(family)} rectangles, spatial half-sides {sorted(set(family.L.tolist()))}")

for sign, label in ((1.0, "e^t"), (-1.0, "e^-t")):
    w = ScalarField.from_function(grid, lambda x, t: np.exp(sign * t) + 0 * x)
    rep = aq_constant(w, 2.0, family, trace=True)
    print(f"\n{label}: [w]_A2 = {rep.value:.10f}, attained at L = {rep.rectangle.L}")
    for L in sorted(set(family.L.tolist())):
        ell = L ** 2
        if sign > 0:
            closed = ((1 - math.exp(-ell)) / ell) ** 2
        else:
            closed = ((math.exp(ell) - 1) / ell) ** 2
        measured = rep.trace[family.L == L]
        print(f"  L={L:<6} measured {measured.max():.10f}  continuum {closed:.10f}")

# Increasing weights reward the future: e^t stays below 1, while e^-t
# grows with the scale and would be unbounded on an unbounded family.
