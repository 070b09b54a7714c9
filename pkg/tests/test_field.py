import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from parabolic_ap.errors import BadParams, BoxOutsideDomain, GridMismatch, NonpositiveWeight
from parabolic_ap.field import (Grid, LevelQuery, ScalarField, as_weight, box_average,
                                box_integral, box_integral_direct, box_integrals, box_max,
                                box_min, level_measure, pointwise_map, time_reverse,
                                weighted_level_measure)
from parabolic_ap.geometry import SpaceTimeBox

from conftest import lognormal


def two_cells():
    return ScalarField(Grid((1, 2), (1.0, 1.0)), [[1.0, 5.0]])


def random_box(rng, grid):
    dom = grid.domain
    lo, hi = [], []
    for a, b in zip(dom.lower, dom.upper):
        u = np.sort(rng.uniform(a, b, size=2))
        if u[1] - u[0] < 1e-6 * (b - a):
            u[1] = u[0] + 1e-3 * (b - a)
        lo.append(u[0])
        hi.append(min(u[1], b))
    return SpaceTimeBox(tuple(lo), tuple(hi))


grids = st.builds(
    lambda shape, h, origin, n: Grid(tuple(shape[:n + 1]), tuple(h[:n + 1]),
                                     tuple(origin[:n + 1])),
    st.lists(st.integers(1, 12), min_size=3, max_size=3),
    st.lists(st.sampled_from([0.1, 0.125, 0.25, 0.3, 1.0]), min_size=3, max_size=3),
    st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    st.integers(1, 2))


def test_constant_integral():
    g = Grid((5, 7), (0.2, 0.1), (-1.0, 3.0))
    f = ScalarField.constant(g, 3.0)
    B = SpaceTimeBox((-0.93, 3.05), (-0.11, 3.61))
    assert box_integral(f, B) == pytest.approx(3 * B.volume, rel=1e-14)
    assert box_average(f, B) == pytest.approx(3.0, rel=1e-14)


def test_half_and_half_box():
    f = two_cells()
    B = SpaceTimeBox((0.0, 0.5), (1.0, 1.5))
    assert box_integral(f, B) == pytest.approx(1 * 0.5 + 5 * 0.5, rel=1e-15)
    assert box_integral_direct(f, B) == 3.0
    assert box_average(f, B) == pytest.approx(3.0, rel=1e-15)
    assert box_min(f, B) == 1.0 and box_max(f, B) == 5.0


def test_face_contact_excluded():
    f = two_cells()
    # touches cell 0 only along t = 1
    assert box_min(f, SpaceTimeBox((0.0, 1.0), (1.0, 2.0))) == 5.0


def test_full_domain_and_single_cell():
    rng = np.random.default_rng(0)
    g = Grid((6, 9), (0.25, 0.125), (1.0, -2.0))
    f = lognormal(rng, g)
    total = math.fsum((f.values * g.cell_volume).ravel())
    assert box_integral(f, g.domain) == pytest.approx(total, rel=1e-14)
    e = g.edges
    cell = SpaceTimeBox((e[0][2], e[1][3]), (e[0][3], e[1][4]))
    assert box_average(f, cell) == pytest.approx(f.values[2, 3], rel=1e-14)


def test_box_outside_rejected():
    f = two_cells()
    with pytest.raises(BoxOutsideDomain):
        box_integral(f, SpaceTimeBox((0.0, -0.5), (1.0, 1.0)))


@given(grids, st.integers(0, 2**32 - 1))
def test_prefix_matches_direct(grid, seed):
    rng = np.random.default_rng(seed)
    f = lognormal(rng, grid, 1.5)
    boxes = [random_box(rng, grid) for _ in range(10)]
    fast = box_integrals(f, [b.lower for b in boxes], [b.upper for b in boxes])
    for b, v in zip(boxes, fast):
        assert v == pytest.approx(box_integral_direct(f, b), rel=1e-12)


@given(grids, st.integers(0, 2**32 - 1))
def test_additive_over_partition(grid, seed):
    rng = np.random.default_rng(seed)
    f = lognormal(rng, grid)
    B = random_box(rng, grid)
    axis = int(rng.integers(grid.ndim))
    cut = float(rng.uniform(B.lower[axis], B.upper[axis]))
    if not B.lower[axis] < cut < B.upper[axis]:
        return
    left = SpaceTimeBox(B.lower, B.upper[:axis] + (cut,) + B.upper[axis + 1:])
    right = SpaceTimeBox(B.lower[:axis] + (cut,) + B.lower[axis + 1:], B.upper)
    assert box_integral(f, left) + box_integral(f, right) == pytest.approx(
        box_integral(f, B), rel=1e-12)


@given(grids, st.integers(0, 2**32 - 1))
def test_average_between_min_and_max(grid, seed):
    rng = np.random.default_rng(seed)
    f = lognormal(rng, grid)
    B = random_box(rng, grid)
    avg = box_average(f, B)
    assert box_min(f, B) * (1 - 1e-12) <= avg <= box_max(f, B) * (1 + 1e-12)


@given(grids, st.integers(0, 2**32 - 1))
def test_level_measures_split_box(grid, seed):
    rng = np.random.default_rng(seed)
    f = lognormal(rng, grid)
    B = random_box(rng, grid)
    lam = float(rng.choice(f.values.ravel()))
    below = level_measure(f, LevelQuery(B, "<", lam))
    above = level_measure(f, LevelQuery(B, ">=", lam))
    assert below + above == pytest.approx(B.volume, rel=1e-12)
    # cell-scan oracle
    scan = 0.0
    for idx in np.ndindex(*grid.shape):
        if f.values[idx] < lam:
            ov = 1.0
            for e, i, a, b in zip(grid.edges, idx, B.lower, B.upper):
                ov *= max(0.0, min(b, e[i + 1]) - max(a, e[i]))
            scan += ov
    assert below == pytest.approx(scan, rel=1e-12, abs=1e-300)


def test_level_measure_trivial_cases():
    g = Grid((4, 4), (0.5, 0.25))
    one = ScalarField.constant(g, 1.0)
    B = SpaceTimeBox((0.1, 0.1), (1.7, 0.9))
    assert level_measure(one, LevelQuery.below(B, 1.0)) == 0.0
    assert level_measure(one, LevelQuery.below(B, 2.0)) == pytest.approx(B.volume, rel=1e-15)
    assert weighted_level_measure(one, LevelQuery.below(B, 2.0)) == pytest.approx(
        level_measure(one, LevelQuery.below(B, 2.0)), rel=1e-15)
    assert weighted_level_measure(one, LevelQuery.above(B, 2.0)) == 0.0


def test_weighted_level_measure_oracle():
    rng = np.random.default_rng(5)
    g = Grid((8, 8), (0.125, 0.125))
    w, f = lognormal(rng, g), lognormal(rng, g)
    B = random_box(rng, g)
    q = LevelQuery.above(B, 1.0)
    got = weighted_level_measure(w, q, f)
    expect = 0.0
    for idx in np.ndindex(*g.shape):
        if f.values[idx] > 1.0:
            ov = 1.0
            for e, i, a, b in zip(g.edges, idx, B.lower, B.upper):
                ov *= max(0.0, min(b, e[i + 1]) - max(a, e[i]))
            expect += ov * w.values[idx]
    assert got == pytest.approx(expect, rel=1e-12)


def test_pointwise_transforms():
    rng = np.random.default_rng(1)
    g = Grid((3, 5), (1.0, 1.0))
    w = lognormal(rng, g)
    assert np.array_equal(pointwise_map(w, "identity").values, w.values)
    assert np.array_equal(time_reverse(time_reverse(w)).values, w.values)
    five = ScalarField.constant(g, 5.0)
    assert np.all(pointwise_map(five, "negative_part", 2.0).values == 0.0)
    with pytest.raises(NonpositiveWeight):
        pointwise_map(w.with_values(-w.values), "power", 0.5)
    assert np.array_equal(pointwise_map(w, np.sqrt).values, np.sqrt(w.values))


def test_weight_validation():
    g = Grid((2, 2), (1.0, 1.0))
    z = ScalarField(g, [[0.0, 1.0], [2.0, 3.0]])
    with pytest.raises(NonpositiveWeight):
        as_weight(z)
    assert as_weight(z, 1e-3).values.min() == 1e-3
    with pytest.raises(BadParams):
        ScalarField(g, [[np.nan, 1.0], [1.0, 1.0]])
    with pytest.raises(GridMismatch):
        weighted_level_measure(z, LevelQuery.below(g.domain, 1.0),
                               ScalarField.constant(Grid((2, 3), (1.0, 1.0)), 1.0))


def test_midpoint_sampling():
    g = Grid((2, 4), (0.5, 0.25), (0.0, 1.0))
    f = ScalarField.from_function(g, lambda x, t: t + 0 * x)
    assert np.allclose(f.values[0], [1.125, 1.375, 1.625, 1.875], rtol=0, atol=1e-15)
