"""Uncentered forward/backward parabolic maximal operators on a finite family.

The continuum operators take a supremum over *all* parabolic rectangles.
Here the supremum runs over an explicit :class:`RectangleFamily`: a
geometric ladder of half-sides and, per scale, a centred lattice of
centres whose rectangles fit inside the grid domain.

    backward:  M^{g-} f(z) = max { avg_{R-(g)} |f| : R+(g) meets cell z }
    forward:   M^{g+} f(z) = max { avg_{R+(g)} |f| : R-(g) meets cell z }

"Meets" means a positive-volume intersection with the cell.  Cells met by
no admissible part are *uncovered*: their value is NaN and their witness
is -1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterator, Sequence

import numpy as np

from .errors import BadParams, EmptyFamily, GridMismatch
from .field import Grid, ScalarField, box_averages, box_integral_direct, cell_overlaps
from .geometry import ParabolicRectangle, SpaceTimeBox, check_lag, part_bounds


@dataclass(frozen=True)
class RectangleFamily:
    """Recipe for a finite rectangle family.

    ``L_min`` defaults to the smallest half-side whose parts span at least one
    cell on every axis; ``ratio`` defaults to ``2**(1/p)`` so time lengths
    double per scale; ``n_scales=None`` keeps every scale that fits.
    Spatial centres step by ``stride_x * L`` and temporal centres by
    ``stride_t * (1 - gamma) * L**p``.
    """

    p: float | None = None
    gamma: float = 0.0
    L_min: float | None = None
    ratio: float | None = None
    n_scales: int | None = None
    stride_x: float = 0.5
    stride_t: float = 0.5

    def __post_init__(self):
        check_lag(self.gamma)
        if self.ratio is not None and not self.ratio > 1:
            raise BadParams(f"scale ratio must exceed 1, got {self.ratio}")
        if not 0 < self.stride_x <= 1 or not 0 < self.stride_t <= 1:
            raise BadParams("strides must lie in (0, 1]")
        if self.L_min is not None and not self.L_min > 0:
            raise BadParams("L_min must be positive")
        if self.n_scales is not None and self.n_scales < 1:
            raise BadParams("n_scales must be >= 1")

    def resolved(self, grid: Grid) -> "RectangleFamily":
        p = grid.p if self.p is None else float(self.p)
        ratio = None if self.ratio is None else float(self.ratio)
        L_min = self.L_min
        if L_min is None:
            L_min = max(max(grid.spacing[:-1]),
                        (grid.spacing[-1] / (1 - self.gamma)) ** (1.0 / p))
        return RectangleFamily(p, self.gamma, float(L_min), ratio, self.n_scales,
                               self.stride_x, self.stride_t)

    def scale(self, k: int) -> float:
        """Half-side of scale ``k`` (``L_min``, ``p`` must be resolved)."""
        if self.ratio is None:
            # 2**(k/p) keeps time lengths exact powers of two
            return self.L_min * 2.0 ** (k / self.p)
        return self.L_min * self.ratio ** k

    def scales(self, grid: Grid) -> list[float]:
        spec = self.resolved(grid)
        dom = grid.domain
        max_space = min(dom.lengths[:-1]) / 2
        max_time = dom.lengths[-1] / 2
        out = []
        k = 0
        L = spec.scale(0)
        while L <= max_space and L ** spec.p <= max_time:
            if spec.n_scales is not None and k >= spec.n_scales:
                break
            out.append(L)
            k += 1
            L = spec.scale(k)
        return out

    def as_dict(self) -> dict:
        return {"p": self.p, "gamma": self.gamma, "L_min": self.L_min,
                "ratio": self.ratio, "n_scales": self.n_scales,
                "stride_x": self.stride_x, "stride_t": self.stride_t}


def lattice(a: float, b: float, r: float, step: float) -> np.ndarray:
    """Centred lattice of points ``c`` with ``a <= c - r`` and ``c + r <= b``."""
    room = (b - a) - 2 * r
    if room < 0:
        return np.empty(0)
    count = int(math.floor(room / step)) + 1
    offset = (room - (count - 1) * step) / 2
    pts = a + r + offset + np.arange(count) * step
    return pts[(pts - r >= a) & (pts + r <= b)]


def lattice_count(a: float, b: float, r: float, step: float) -> int:
    room = (b - a) - 2 * r
    return 0 if room < 0 else int(math.floor(room / step)) + 1


class EnumeratedFamily(Sequence[ParabolicRectangle]):
    """A concrete, ordered list of rectangles on a grid.

    Order is scale-major, then lexicographic in ``(x_1, ..., x_n, t)``.
    Rectangle ``i`` has centre ``centers[i]`` (time last) and half-side
    ``L[i]``.
    """

    def __init__(self, grid: Grid, spec: RectangleFamily, centers: np.ndarray,
                 L: np.ndarray, scale_index: np.ndarray,
                 mirror_of: "EnumeratedFamily | None" = None):
        self.grid = grid
        self.spec = spec
        self.p = float(spec.p)
        self.gamma = float(spec.gamma)
        self.centers = np.asarray(centers, dtype=float).reshape(-1, grid.ndim)
        self.L = np.asarray(L, dtype=float)
        self.scale_index = np.asarray(scale_index, dtype=int)
        self._parts: dict = {}
        self._views: dict = {}
        self._ranges: dict = {}
        self._mirror_of = mirror_of

    def __len__(self) -> int:
        return len(self.L)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        c = self.centers[i]
        return ParabolicRectangle(tuple(c[:-1]), c[-1], self.L[i], self.p)

    def __iter__(self) -> Iterator[ParabolicRectangle]:
        return (self[i] for i in range(len(self)))

    def parts(self, which: str, gamma: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Corner arrays ``(lo, hi)`` of every rectangle's upper/lower part."""
        g = self.gamma if gamma is None else check_lag(gamma)
        key = (which, g)
        if key not in self._parts:
            lo, hi = part_bounds(self.centers, self.L, self.p, g, which)
            dom = self.grid.domain
            # reflected families can stick out by an ulp; nothing larger is possible
            lo = np.clip(lo, dom.lower, dom.upper)
            hi = np.clip(hi, dom.lower, dom.upper)
            lo.flags.writeable = False
            hi.flags.writeable = False
            self._parts[key] = (lo, hi)
        return self._parts[key]

    def part_box(self, i: int, which: str, gamma: float | None = None) -> SpaceTimeBox:
        lo, hi = self.parts(which, gamma)
        return SpaceTimeBox(tuple(lo[i]), tuple(hi[i]))

    def cell_views(self, which: str, gamma: float | None = None) -> list:
        """Per-rectangle ``(slices, overlap_volumes)`` of the chosen part."""
        g = self.gamma if gamma is None else check_lag(gamma)
        key = (which, g)
        if key not in self._views:
            lo, hi = self.parts(which, g)
            self._views[key] = [cell_overlaps(self.grid, SpaceTimeBox(tuple(a), tuple(b)))
                                for a, b in zip(lo, hi)]
        return self._views[key]

    def cell_ranges(self, which: str, gamma: float | None = None):
        """Per rectangle and axis, the ``[start, stop)`` cells met by the part."""
        g = self.gamma if gamma is None else check_lag(gamma)
        key = (which, g)
        if key not in self._ranges:
            if self._mirror_of is None:
                starts, stops = _cell_ranges(self.grid, *self.parts(which, g))
            else:
                # mirror the original's opposite part in index space, so contact
                # decisions survive the reflection exactly
                other = "-" if which == "+" else "+"
                s0, t0 = self._mirror_of.cell_ranges(other, g)
                starts, stops = s0.copy(), t0.copy()
                nt = self.grid.shape[-1]
                starts[:, -1] = nt - t0[:, -1]
                stops[:, -1] = nt - s0[:, -1]
            self._ranges[key] = (starts, stops)
        return self._ranges[key]

    def reflect_time(self) -> "EnumeratedFamily":
        """The same rectangles mirrored by ``t -> t_lo + t_hi - t`` (same order).

        Reflecting twice returns the original object.
        """
        if self._mirror_of is not None:
            return self._mirror_of
        dom = self.grid.domain
        c = self.centers.copy()
        c[:, -1] = (dom.lower[-1] + dom.upper[-1]) - c[:, -1]
        return EnumeratedFamily(self.grid, self.spec, c, self.L, self.scale_index,
                                mirror_of=self)

    def summary(self) -> dict:
        return {"spec": self.spec.as_dict(), "size": len(self),
                "scales": sorted(set(float(v) for v in self.L)),
                "grid": self.grid.as_dict()}


def enumerate_family(grid: Grid, spec: RectangleFamily | None = None) -> EnumeratedFamily:
    spec = (spec or RectangleFamily()).resolved(grid)
    dom = grid.domain
    centers, Ls, sidx = [], [], []
    for k, L in enumerate(spec.scales(grid)):
        r = L ** spec.p
        axes = [lattice(a, b, L, spec.stride_x * L)
                for a, b in zip(dom.lower[:-1], dom.upper[:-1])]
        axes.append(lattice(dom.lower[-1], dom.upper[-1], r,
                            spec.stride_t * (1 - spec.gamma) * r))
        if any(len(a) == 0 for a in axes):
            continue
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, grid.ndim)
        centers.append(mesh)
        Ls.append(np.full(len(mesh), L))
        sidx.append(np.full(len(mesh), k))
    if not centers:
        raise EmptyFamily("no rectangle of the family fits inside the grid domain")
    return EnumeratedFamily(grid, spec, np.concatenate(centers), np.concatenate(Ls),
                            np.concatenate(sidx))


def resolve_family(family, grid: Grid) -> EnumeratedFamily:
    """Accept either a recipe or an enumerated family built on ``grid``."""
    if isinstance(family, EnumeratedFamily):
        if family.grid != grid:
            raise GridMismatch("family was enumerated on a different grid")
        if len(family) == 0:
            raise EmptyFamily("family is empty")
        return family
    if family is None or isinstance(family, RectangleFamily):
        return enumerate_family(grid, family)
    raise BadParams(f"expected RectangleFamily or EnumeratedFamily, got {type(family)!r}")


@dataclass
class MaximalResult:
    values: np.ndarray
    witness: np.ndarray
    family: EnumeratedFamily = dc_field(repr=False)
    direction: str = "-"

    @property
    def covered(self) -> np.ndarray:
        return self.witness >= 0

    @property
    def grid(self) -> Grid:
        return self.family.grid

    def filled(self, fill) -> np.ndarray:
        """Values with uncovered cells replaced by ``fill`` (scalar or array)."""
        return np.where(self.covered, self.values, fill)

    def as_field(self, fill: float) -> ScalarField:
        return ScalarField(self.grid, self.filled(fill))


def _cell_ranges(grid: Grid, lo: np.ndarray, hi: np.ndarray):
    """Per box, per axis ``[start, stop)`` of cells met in positive volume."""
    starts = np.empty(lo.shape, dtype=int)
    stops = np.empty(lo.shape, dtype=int)
    for axis, e in enumerate(grid.edges):
        ncell = len(e) - 1
        s = np.clip(np.searchsorted(e, lo[:, axis], side="right") - 1, 0, ncell - 1)
        t = np.clip(np.searchsorted(e, hi[:, axis], side="left"), 1, ncell)
        starts[:, axis] = s
        stops[:, axis] = np.maximum(t, s + 1)
    return starts, stops


def _scatter_max(grid: Grid, avgs: np.ndarray, starts: np.ndarray, stops: np.ndarray):
    values = np.full(grid.shape, np.nan)
    witness = np.full(grid.shape, -1, dtype=np.int64)
    idx = np.arange(len(avgs))
    # ascending average, ties broken so the lowest index is written last and wins
    order = np.lexsort((-idx, avgs))
    for i in order:
        sl = tuple(slice(a, b) for a, b in zip(starts[i], stops[i]))
        values[sl] = avgs[i]
        witness[sl] = i
    return values, witness


def _backward(f: ScalarField, fam: EnumeratedFamily) -> tuple[np.ndarray, np.ndarray]:
    absf = f if np.all(f.values >= 0) else f.with_values(np.abs(f.values))
    # averages cannot leave the range of |f|; clipping keeps flat data exact
    avgs = np.clip(box_averages(absf, *fam.parts("-")), absf.values.min(), absf.values.max())
    return _scatter_max(fam.grid, avgs, *fam.cell_ranges("+"))


def maximal_backward(f: ScalarField, family=None) -> MaximalResult:
    """``M^{gamma-} f`` with ``gamma`` taken from the family."""
    fam = resolve_family(family, f.grid)
    values, witness = _backward(f, fam)
    return MaximalResult(values, witness, fam, "-")


def maximal_forward(f: ScalarField, family=None) -> MaximalResult:
    """``M^{gamma+} f``, computed as the time-reversal conjugate of the backward operator.

    Rectangle ``i`` of the reflected family is the mirror image of rectangle
    ``i`` here, so witnesses refer to this family's indices.
    """
    fam = resolve_family(family, f.grid)
    rev = ScalarField(f.grid, f.values[..., ::-1])
    values, witness = _backward(rev, fam.reflect_time())
    return MaximalResult(values[..., ::-1].copy(), witness[..., ::-1].copy(), fam, "+")


def maximal_oracle(f: ScalarField, family=None, direction: str = "-") -> MaximalResult:
    """Reference operator straight from the definition.

    Averages are summed cell by cell (no prefix table), and every cell loops
    over the whole family testing positive-volume contact with the part.
    """
    fam = resolve_family(family, f.grid)
    if direction == "-":
        avg_part, hit_part = "-", "+"
    elif direction == "+":
        avg_part, hit_part = "+", "-"
    else:
        raise BadParams(f"direction must be '+' or '-', got {direction!r}")
    absf = f.with_values(np.abs(f.values))
    alo, ahi = part_bounds(fam.centers, fam.L, fam.p, fam.gamma, avg_part)
    avgs = np.array([box_integral_direct(absf, SpaceTimeBox(tuple(a), tuple(b)))
                     / float(np.prod(b - a)) for a, b in zip(alo, ahi)])
    hlo, hhi = part_bounds(fam.centers, fam.L, fam.p, fam.gamma, hit_part)
    grid = f.grid
    values = np.full(grid.shape, np.nan)
    witness = np.full(grid.shape, -1, dtype=np.int64)
    for cell in np.ndindex(*grid.shape):
        cl = np.array([grid.edges[k][c] for k, c in enumerate(cell)])
        ch = np.array([grid.edges[k][c + 1] for k, c in enumerate(cell)])
        hit = np.all(np.maximum(hlo, cl) < np.minimum(hhi, ch), axis=1)
        if hit.any():
            cand = np.where(hit, avgs, -np.inf)
            j = int(np.argmax(cand))
            values[cell] = avgs[j]
            witness[cell] = j
    return MaximalResult(values, witness, fam, direction)
