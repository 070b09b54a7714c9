"""Piecewise-constant fields on a regular space-time grid.

A :class:`ScalarField` holds one value per cell and is constant on each
cell, so every integral, essential infimum and level-set measure over an
axis-aligned box is computed exactly from per-cell overlap volumes.  Box
integrals go through a :class:`PrefixTable` (summed-volume table) held in
extended precision so that small boxes inside large grids do not lose
relative accuracy to cancellation.
"""
from __future__ import annotations

import itertools
import math
import operator
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import (BadParams, BoxOutsideDomain, DegenerateBox, GridMismatch,
                     NonpositiveWeight)
from .geometry import SpaceTimeBox, as_box

_ACC = np.longdouble


@dataclass(frozen=True)
class Grid:
    """Regular grid of ``shape`` cells; axes are ``(x_1, ..., x_n, t)``."""

    shape: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...] | None = None
    p: float = 2.0

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        spacing = tuple(float(h) for h in self.spacing)
        origin = (tuple(0.0 for _ in shape) if self.origin is None
                  else tuple(float(o) for o in self.origin))
        if len(shape) < 2:
            raise BadParams("grid needs at least one space and one time axis")
        if not (len(spacing) == len(origin) == len(shape)):
            raise BadParams("shape, spacing and origin must have equal length")
        if any(s < 1 for s in shape):
            raise BadParams(f"cell counts must be >= 1, got {shape}")
        if any(not h > 0 for h in spacing):
            raise BadParams(f"spacings must be positive, got {spacing}")
        if not float(self.p) >= 1:
            raise BadParams(f"p must be >= 1, got {self.p}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "p", float(self.p))

    @property
    def n(self) -> int:
        return len(self.shape) - 1

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def edges(self) -> tuple[np.ndarray, ...]:
        return tuple(o + np.arange(s + 1) * h
                     for s, h, o in zip(self.shape, self.spacing, self.origin))

    @cached_property
    def midpoints(self) -> tuple[np.ndarray, ...]:
        return tuple(0.5 * (e[:-1] + e[1:]) for e in self.edges)

    @property
    def domain(self) -> SpaceTimeBox:
        return SpaceTimeBox(tuple(e[0] for e in self.edges),
                            tuple(e[-1] for e in self.edges))

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Cell-midpoint coordinate arrays, each of shape ``self.shape``."""
        return tuple(np.meshgrid(*self.midpoints, indexing="ij"))

    def check_inside(self, lo, hi) -> None:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        dom_lo = np.array([e[0] for e in self.edges])
        dom_hi = np.array([e[-1] for e in self.edges])
        if np.any(~(hi > lo)):
            raise DegenerateBox("box with nonpositive extent")
        if np.any(lo < dom_lo) or np.any(hi > dom_hi):
            raise BoxOutsideDomain("box is not contained in the grid domain")

    def as_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "shape": list(self.shape),
                "spacing": list(self.spacing), "origin": list(self.origin)}


def _locate(edges: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cell index and fractional position of coordinates ``a`` (inside the axis)."""
    ncell = len(edges) - 1
    j = np.clip(np.searchsorted(edges, a, side="right") - 1, 0, ncell - 1)
    theta = (a - edges[j]) / (edges[j + 1] - edges[j])
    return j, theta


class PrefixTable:
    """Summed-volume table of cell integrals with a zero border.

    ``table[i_1, ..., i_d]`` is the integral over the cells with index
    below ``i`` on every axis.  The running integral is multilinear inside
    each cell, so box integrals follow from corner interpolation and
    ``2**d`` inclusion-exclusion; this is exact for piecewise-constant fields.
    """

    def __init__(self, field: "ScalarField"):
        self.grid = field.grid
        vals = np.asarray(field.values, dtype=_ACC) * _ACC(self.grid.cell_volume)
        table = np.zeros(tuple(s + 1 for s in self.grid.shape), dtype=_ACC)
        for axis in range(vals.ndim):
            vals = np.cumsum(vals, axis=axis)
        table[tuple(slice(1, None) for _ in self.grid.shape)] = vals
        table.flags.writeable = False
        self.table = table

    def integrals(self, lo, hi) -> np.ndarray:
        """Exact integrals over boxes given by corner arrays of shape ``(m, d)``."""
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        m, d = lo.shape
        idx_terms = []
        for axis in range(d):
            e = self.grid.edges[axis]
            jh, th = _locate(e, hi[:, axis])
            jl, tl = _locate(e, lo[:, axis])
            idx_terms.append(((jh, 1 - th), (jh + 1, th), (jl, tl - 1), (jl + 1, -tl)))
        total = np.zeros(m, dtype=_ACC)
        for combo in itertools.product(*idx_terms):
            index = tuple(c[0] for c in combo)
            coef = np.ones(m, dtype=_ACC)
            for c in combo:
                coef *= c[1]
            total += coef * self.table[index]
        return total.astype(float)


def cell_overlaps(grid: Grid, box: SpaceTimeBox) -> tuple[tuple[slice, ...], np.ndarray]:
    """Cells meeting ``box`` in positive volume and their overlap volumes.

    Returns index slices into the value array and a weight array of the
    same shape as the sliced block.  Cells touching the box only on a face
    are excluded.
    """
    box = as_box(box)
    grid.check_inside(box.lower, box.upper)
    slices = []
    lengths = []
    for e, a, b in zip(grid.edges, box.lower, box.upper):
        ncell = len(e) - 1
        i0 = min(max(int(np.searchsorted(e, a, side="right")) - 1, 0), ncell - 1)
        i1 = max(min(int(np.searchsorted(e, b, side="left")), ncell), i0 + 1)
        seg = np.minimum(b, e[i0 + 1:i1 + 1]) - np.maximum(a, e[i0:i1])
        slices.append(slice(i0, i1))
        lengths.append(seg)
    weights = lengths[0]
    for seg in lengths[1:]:
        weights = np.multiply.outer(weights, seg)
    return tuple(slices), weights


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Cell values of a piecewise-constant function on ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise BadParams("field values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[..., np.ndarray]) -> "ScalarField":
        """Sample ``func(x_1, ..., x_n, t)`` at cell midpoints."""
        return cls(grid, np.broadcast_to(func(*grid.mesh()), grid.shape))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @cached_property
    def prefix(self) -> PrefixTable:
        return PrefixTable(self)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def total(self) -> float:
        return math.fsum((self.values * self.grid.cell_volume).ravel())


def require_same_grid(*fields: ScalarField) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch("fields live on different grids")
    return grid


def as_weight(f: ScalarField, clamp_eps: float | None = None) -> ScalarField:
    """Validate positivity; optionally clamp values below ``clamp_eps`` up to it."""
    if np.all(f.values > 0):
        return f
    if clamp_eps is None:
        raise NonpositiveWeight("weight has nonpositive values; pass clamp_eps explicitly")
    if not clamp_eps > 0:
        raise BadParams("clamp_eps must be positive")
    return f.with_values(np.maximum(f.values, clamp_eps))


# --- integrals ------------------------------------------------------------

def box_integral(f: ScalarField, B) -> float:
    B = as_box(B)
    f.grid.check_inside(B.lower, B.upper)
    return float(f.prefix.integrals([B.lower], [B.upper])[0])


def box_integral_direct(f: ScalarField, B) -> float:
    """Reference integral by explicit per-cell overlap summation (no prefix sums)."""
    sl, wts = cell_overlaps(f.grid, as_box(B))
    return math.fsum((f.values[sl] * wts).ravel())


def box_average(f: ScalarField, B) -> float:
    B = as_box(B)
    return box_integral(f, B) / B.volume


def box_min(f: ScalarField, B) -> float:
    """Essential infimum over ``B``: minimum over cells met in positive volume."""
    sl, _ = cell_overlaps(f.grid, as_box(B))
    return float(f.values[sl].min())


def box_max(f: ScalarField, B) -> float:
    sl, _ = cell_overlaps(f.grid, as_box(B))
    return float(f.values[sl].max())


def box_integrals(f: ScalarField, lo, hi) -> np.ndarray:
    """Vectorised :func:`box_integral` over corner arrays ``(m, n+1)``."""
    f.grid.check_inside(lo, hi)
    return f.prefix.integrals(lo, hi)


def box_averages(f: ScalarField, lo, hi) -> np.ndarray:
    lo = np.atleast_2d(lo)
    hi = np.atleast_2d(hi)
    return box_integrals(f, lo, hi) / np.prod(hi - lo, axis=1)


# --- level sets -----------------------------------------------------------

_OPS = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}


@dataclass(frozen=True)
class LevelQuery:
    """The set ``box ∩ {f op threshold}``."""

    box: SpaceTimeBox
    op: str
    threshold: float

    def __post_init__(self):
        if self.op not in _OPS:
            raise BadParams(f"unknown comparison {self.op!r}")
        if not math.isfinite(self.threshold):
            raise BadParams("threshold must be finite")
        object.__setattr__(self, "box", as_box(self.box))

    @classmethod
    def below(cls, box, lam: float) -> "LevelQuery":
        return cls(box, "<", float(lam))

    @classmethod
    def above(cls, box, lam: float) -> "LevelQuery":
        return cls(box, ">", float(lam))

    @classmethod
    def below_fraction(cls, box, beta: float, c: float) -> "LevelQuery":
        """``{w < beta * c}``, e.g. with ``c`` the average over the lower part."""
        return cls(box, "<", float(beta) * float(c))

    def mask(self, values: np.ndarray) -> np.ndarray:
        return _OPS[self.op](values, self.threshold)


def level_measure(f: ScalarField, q: LevelQuery) -> float:
    sl, wts = cell_overlaps(f.grid, q.box)
    return math.fsum(wts[q.mask(f.values[sl])].ravel())


def weighted_level_measure(w: ScalarField, q: LevelQuery,
                           predicate_field: ScalarField | None = None) -> float:
    """``∫ w`` over ``q.box ∩ {g op threshold}`` with ``g = predicate_field or w``."""
    g = w if predicate_field is None else predicate_field
    require_same_grid(w, g)
    sl, wts = cell_overlaps(w.grid, q.box)
    sel = q.mask(g.values[sl])
    return math.fsum((w.values[sl] * wts)[sel].ravel())


# --- pointwise transforms -------------------------------------------------

def power(f: ScalarField, s: float) -> ScalarField:
    if s != int(s) and np.any(f.values <= 0):
        raise NonpositiveWeight("fractional power of a field with nonpositive values")
    if s < 0 and np.any(f.values == 0):
        raise NonpositiveWeight("negative power of a field with zero values")
    return f.with_values(f.values ** s)


def negative_part(f: ScalarField, c: float = 0.0) -> ScalarField:
    """``(f - c)^- = max(c - f, 0)``."""
    return f.with_values(np.maximum(c - f.values, 0.0))


def maximum(f: ScalarField, g: ScalarField) -> ScalarField:
    require_same_grid(f, g)
    return f.with_values(np.maximum(f.values, g.values))


def minimum(f: ScalarField, g: ScalarField) -> ScalarField:
    require_same_grid(f, g)
    return f.with_values(np.minimum(f.values, g.values))


def time_reverse(f: ScalarField) -> ScalarField:
    """Mirror the cell order along the time axis (``t -> t_lo + t_hi - t``)."""
    return f.with_values(f.values[..., ::-1])


_TRANSFORMS = {
    "identity": lambda f: f,
    "abs": lambda f: f.with_values(np.abs(f.values)),
    "time_reverse": time_reverse,
}


def pointwise_map(f: ScalarField, transform, *args) -> ScalarField:
    """Apply a named transform or a callable on the value array.

    Named transforms: ``identity``, ``abs``, ``time_reverse``, ``power`` (arg
    ``s``), ``negative_part`` (arg ``c``), ``max`` / ``min`` (arg field).
    """
    if callable(transform):
        return f.with_values(transform(f.values, *args))
    if transform in _TRANSFORMS:
        return _TRANSFORMS[transform](f)
    if transform == "power":
        return power(f, *args)
    if transform == "negative_part":
        return negative_part(f, *args)
    if transform == "max":
        return maximum(f, *args)
    if transform == "min":
        return minimum(f, *args)
    raise BadParams(f"unknown transform {transform!r}")
