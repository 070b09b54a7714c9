"""Parabolic rectangles and the space-time boxes derived from them.

A parabolic rectangle ``R(x, t, L)`` is ``Q(x, L) x (t - L**p, t + L**p)``
where ``Q(x, L)`` is the closed cube of half-side ``L``.  Its upper and
lower parts with time lag ``gamma`` are the boxes

    R+(gamma) = Q(x, L) x (t + gamma L**p, t + L**p)
    R-(gamma) = Q(x, L) x (t - L**p, t - gamma L**p)

Coordinates are ordered ``(x_1, ..., x_n, t)`` throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadParams, DegenerateBox


def check_lag(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 <= gamma < 1.0:
        raise BadParams(f"time lag must satisfy 0 <= gamma < 1, got {gamma}")
    return gamma


@dataclass(frozen=True)
class SpaceTimeBox:
    """Axis-aligned box; last coordinate is time."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or len(lo) < 2:
            raise BadParams("box needs matching lower/upper of length n+1 >= 2")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if any(not (b > a) for a, b in zip(lo, hi)):
            raise DegenerateBox(f"box has nonpositive extent: {lo} -> {hi}")

    @property
    def ndim(self) -> int:
        return len(self.lower)

    @property
    def n(self) -> int:
        return len(self.lower) - 1

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def time_interval(self) -> tuple[float, float]:
        return self.lower[-1], self.upper[-1]

    def shift_time(self, dt: float) -> "SpaceTimeBox":
        return SpaceTimeBox(self.lower[:-1] + (self.lower[-1] + dt,),
                            self.upper[:-1] + (self.upper[-1] + dt,))

    def reflect_time(self, t0: float) -> "SpaceTimeBox":
        """Mirror image under ``t -> 2 t0 - t``."""
        return SpaceTimeBox(self.lower[:-1] + (2 * t0 - self.upper[-1],),
                            self.upper[:-1] + (2 * t0 - self.lower[-1],))

    def contains(self, other: "SpaceTimeBox") -> bool:
        return all(a <= c and d <= b for a, b, c, d in
                   zip(self.lower, self.upper, other.lower, other.upper))

    def as_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class ParabolicRectangle:
    center_x: tuple[float, ...]
    center_t: float
    L: float
    p: float = 2.0

    def __post_init__(self):
        cx = np.atleast_1d(np.asarray(self.center_x, dtype=float))
        object.__setattr__(self, "center_x", tuple(float(v) for v in cx))
        object.__setattr__(self, "center_t", float(self.center_t))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "p", float(self.p))
        if not self.L > 0:
            raise BadParams(f"half-side L must be positive, got {self.L}")
        # p == 1 is admitted for the statements that allow it
        if not self.p >= 1:
            raise BadParams(f"scaling exponent p must be >= 1, got {self.p}")

    @property
    def n(self) -> int:
        return len(self.center_x)

    @property
    def time_radius(self) -> float:
        """``L**p``; half of the time length."""
        return self.L ** self.p

    def _cube(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        return (tuple(c - self.L for c in self.center_x),
                tuple(c + self.L for c in self.center_x))

    def box(self) -> SpaceTimeBox:
        lo, hi = self._cube()
        r = self.time_radius
        return SpaceTimeBox(lo + (self.center_t - r,), hi + (self.center_t + r,))

    def as_dict(self) -> dict:
        return {"center": list(self.center_x) + [self.center_t],
                "L": self.L, "p": self.p}


def upper_part(R: ParabolicRectangle, gamma: float) -> SpaceTimeBox:
    gamma = check_lag(gamma)
    lo, hi = R._cube()
    r = R.time_radius
    return SpaceTimeBox(lo + (R.center_t + gamma * r,), hi + (R.center_t + r,))


def lower_part(R: ParabolicRectangle, gamma: float) -> SpaceTimeBox:
    gamma = check_lag(gamma)
    lo, hi = R._cube()
    r = R.time_radius
    return SpaceTimeBox(lo + (R.center_t - r,), hi + (R.center_t - gamma * r,))


def translated_lower(R: ParabolicRectangle, alpha: float, tau: float) -> SpaceTimeBox:
    """``S-(alpha) = R+(alpha) - (0, tau (1 + alpha) L**p)``, ``tau >= 1``.

    For ``tau == 1`` this is the lower part itself; that case is returned
    directly so the two agree bit for bit.
    """
    if not tau >= 1:
        raise BadParams(f"tau must be >= 1, got {tau}")
    if tau == 1:
        return lower_part(R, alpha)
    return upper_part(R, alpha).shift_time(-tau * (1 + alpha) * R.time_radius)


def translated_upper(R: ParabolicRectangle, alpha: float, tau: float) -> SpaceTimeBox:
    """``S+(alpha) = R-(alpha) + (0, tau (1 - alpha) L**p)``, ``tau > 0``."""
    if not tau > 0:
        raise BadParams(f"tau must be > 0, got {tau}")
    return lower_part(R, alpha).shift_time(tau * (1 - alpha) * R.time_radius)


def dilate(R: ParabolicRectangle, lam: float) -> ParabolicRectangle:
    if not lam > 0:
        raise BadParams(f"dilation factor must be positive, got {lam}")
    return ParabolicRectangle(R.center_x, R.center_t, lam * R.L, R.p)


def part_volume(n: int, L: float, p: float, gamma: float) -> float:
    """``|R+(gamma)| = |R-(gamma)| = (2L)**n (1 - gamma) L**p``."""
    return (2 * L) ** n * (1 - gamma) * L ** p


def part_bounds(centers: np.ndarray, L: np.ndarray, p: float, gamma: float,
                which: str) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised part boxes for many rectangles.

    ``centers`` has shape ``(m, n+1)`` (time last), ``L`` shape ``(m,)``.
    Returns ``(lower, upper)`` corner arrays of shape ``(m, n+1)`` computed
    with exactly the same arithmetic as :func:`upper_part` / :func:`lower_part`.
    """
    centers = np.asarray(centers, dtype=float)
    L = np.asarray(L, dtype=float)
    # scalar pow per entry: numpy's vectorised pow can differ from float.__pow__ in the last bit
    r = np.array([v ** p for v in L.tolist()], dtype=float)
    lo = np.empty_like(centers)
    hi = np.empty_like(centers)
    lo[:, :-1] = centers[:, :-1] - L[:, None]
    hi[:, :-1] = centers[:, :-1] + L[:, None]
    t = centers[:, -1]
    if which == "+":
        lo[:, -1] = t + gamma * r
        hi[:, -1] = t + r
    elif which == "-":
        lo[:, -1] = t - r
        hi[:, -1] = t - gamma * r
    else:
        raise BadParams(f"part must be '+' or '-', got {which!r}")
    return lo, hi


def boxes_from_bounds(lo: np.ndarray, hi: np.ndarray) -> list[SpaceTimeBox]:
    return [SpaceTimeBox(tuple(a), tuple(b)) for a, b in zip(lo, hi)]


def as_box(obj: SpaceTimeBox | Sequence) -> SpaceTimeBox:
    if isinstance(obj, SpaceTimeBox):
        return obj
    lo, hi = obj
    return SpaceTimeBox(tuple(lo), tuple(hi))
