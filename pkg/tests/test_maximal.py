import numpy as np
import pytest
from hypothesis import given, strategies as st

from parabolic_ap.errors import EmptyFamily
from parabolic_ap.field import Grid, ScalarField, time_reverse
from parabolic_ap.geometry import lower_part, upper_part
from parabolic_ap.maximal import (RectangleFamily, enumerate_family, lattice_count,
                                  maximal_backward, maximal_forward, maximal_oracle)

from conftest import lognormal, make_grid

seeds = st.integers(0, 2**32 - 1)


def assert_same(a, b, rtol=1e-12, atol=0.0):
    assert np.array_equal(a.covered, b.covered)
    cov = a.covered
    np.testing.assert_allclose(a.values[cov], b.values[cov], rtol=rtol, atol=atol)


def test_family_inside_domain(grid16):
    fam = enumerate_family(grid16)
    dom = grid16.domain
    for R in fam:
        assert dom.contains(upper_part(R, 0.0)) and dom.contains(lower_part(R, 0.0))
    assert len(fam) == 498


def test_family_count_closed_form(grid16):
    spec = RectangleFamily().resolved(grid16)
    count = 0
    for L in spec.scales(grid16):
        count += (lattice_count(0, 2, L, 0.5 * L)
                  * lattice_count(0, 1, L ** 2, 0.5 * L ** 2))
    assert len(enumerate_family(grid16)) == count
    assert len(spec.scales(grid16)) == 3


def test_single_rectangle_family():
    g = Grid((4, 4), (0.5, 0.5))
    fam = enumerate_family(g, RectangleFamily(L_min=1.0, n_scales=1))
    assert len(fam) == 1
    rng = np.random.default_rng(0)
    f = lognormal(rng, g)
    res = maximal_oracle(f, fam)
    avg = np.mean(f.values[:, :2])
    assert np.allclose(res.values[res.covered], avg, rtol=1e-14)


def test_doubling_domain_grows_family():
    spec = RectangleFamily(L_min=0.25, n_scales=2)
    small = enumerate_family(Grid((8, 8), (0.125, 0.0625)), spec)
    big = enumerate_family(Grid((16, 16), (0.125, 0.0625)), spec)
    assert len(big) > len(small)


def test_empty_family():
    with pytest.raises(EmptyFamily):
        enumerate_family(Grid((4, 4), (0.125, 0.0625)), RectangleFamily(L_min=1.0))


def test_constant_field(grid16):
    f = ScalarField.constant(grid16, 2.5)
    for op in (maximal_backward, maximal_forward):
        res = op(f)
        assert np.allclose(res.values[res.covered], 2.5, rtol=1e-14)
        assert res.covered.sum() > 0 and (~res.covered).sum() > 0
    zero = maximal_oracle(ScalarField.constant(grid16, 0.0))
    assert np.all(zero.values[zero.covered] == 0)


def test_spike_against_oracle(grid16):
    vals = np.zeros(grid16.shape)
    vals[7, 9] = 1.0
    f = ScalarField(grid16, vals)
    # averages that vanish exactly come back as ~1e-22 from the prefix table
    assert_same(maximal_backward(f), maximal_oracle(f, direction="-"), atol=1e-18)
    assert_same(maximal_forward(f), maximal_oracle(f, direction="+"), atol=1e-18)


def test_nondecreasing_profile_bound(grid16):
    rng = np.random.default_rng(3)
    prof = np.cumsum(rng.random(16)) + 1
    f = ScalarField(grid16, np.broadcast_to(prof, grid16.shape))
    res = maximal_oracle(f, direction="-")
    assert np.all(res.values[res.covered] <= f.values[res.covered] * (1 + 1e-14))
    fast = maximal_backward(f)
    assert np.all(fast.values[fast.covered] <= f.values[fast.covered] * (1 + 1e-14))


@given(seeds, st.sampled_from([0.0, 0.3]), st.sampled_from([1.5, 2.0, 3.0]))
def test_oracle_equivalence(seed, gamma, p):
    rng = np.random.default_rng(seed)
    spec = RectangleFamily(gamma=gamma)
    g = make_grid(rng, 1, 12, p, spec)
    f = lognormal(rng, g, 1.0)
    fam = enumerate_family(g, spec)
    assert_same(maximal_backward(f, fam), maximal_oracle(f, fam, "-"))
    assert_same(maximal_forward(f, fam), maximal_oracle(f, fam, "+"))


@given(seeds)
def test_time_reversal_identity(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(rng, 1, 16)
    f = lognormal(rng, g)
    fam = enumerate_family(g)
    fwd = maximal_forward(f, fam)
    back = maximal_backward(time_reverse(f), fam.reflect_time())
    assert np.array_equal(fwd.witness, back.witness[..., ::-1])
    assert np.array_equal(fwd.values[fwd.covered], back.values[..., ::-1][fwd.covered])


@given(seeds)
def test_sublinear_homogeneous_monotone(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(rng, 1, 12)
    f, h = lognormal(rng, g), lognormal(rng, g)
    fam = enumerate_family(g)
    for op in (maximal_backward, maximal_forward):
        Mf, Mh = op(f, fam), op(h, fam)
        Ms = op(f.with_values(f.values + h.values), fam)
        cov = Mf.covered
        assert np.all(Ms.values[cov] <= (Mf.values[cov] + Mh.values[cov]) * (1 + 1e-13))
        M3 = op(f.with_values(3 * f.values), fam)
        np.testing.assert_allclose(M3.values[cov], 3 * Mf.values[cov], rtol=1e-13)
        big = op(f.with_values(np.maximum(f.values, h.values)), fam)
        assert np.all(big.values[cov] >= Mf.values[cov] * (1 - 1e-13))
        assert np.nanmax(Mf.values) <= f.values.max() * (1 + 1e-13)
        assert np.all(Mf.values[cov] >= 0)


def test_family_enlargement_increases_values(grid16):
    rng = np.random.default_rng(8)
    f = lognormal(rng, grid16)
    coarse = enumerate_family(grid16, RectangleFamily(n_scales=2))
    fine = enumerate_family(grid16, RectangleFamily())
    assert len(fine) > len(coarse)
    assert np.array_equal(fine.centers[:len(coarse)], coarse.centers)
    a, b = maximal_backward(f, coarse), maximal_backward(f, fine)
    assert np.all(b.covered[a.covered])
    assert np.all(b.values[a.covered] >= a.values[a.covered])


def test_two_dimensional_oracle():
    rng = np.random.default_rng(11)
    g = Grid((6, 6, 8), (0.25, 0.25, 0.125))
    f = lognormal(rng, g)
    fam = enumerate_family(g, RectangleFamily(gamma=0.25))
    assert_same(maximal_backward(f, fam), maximal_oracle(f, fam, "-"))
    assert_same(maximal_forward(f, fam), maximal_oracle(f, fam, "+"))
