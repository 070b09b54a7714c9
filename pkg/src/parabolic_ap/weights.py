"""Parabolic Muckenhoupt constants and the A_infinity audit.

Every constant here is a supremum over an explicit rectangle family, so it
is a lower bound for the continuum constant on the grid domain.  Checks of
inequalities that hold rectangle by rectangle are asserted per rectangle
and report every violating rectangle.

Floating-point slack: checks compare ``lhs <= rhs * (1 + rtol)`` with
``rtol = 1e-12`` by default.  The inequalities can be equalities (constant
weights, ``E`` equal to the whole part) and the two sides are assembled
through different summation paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from .errors import BadParams, ExponentRange, ZeroIntegrand
from .field import (ScalarField, as_weight, box_average, box_averages, box_min,
                    require_same_grid)
from .geometry import (ParabolicRectangle, SpaceTimeBox, check_lag, lower_part,
                       translated_upper, upper_part)
from .maximal import (EnumeratedFamily, maximal_backward, maximal_forward,
                      resolve_family)

RTOL = 1e-12
DEFAULT_BETAS = (0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9)


def conjugate(q: float) -> float:
    """``q' = q / (q - 1)``."""
    if not q > 1:
        raise ExponentRange(f"conjugate exponent needs q > 1, got {q}")
    return q / (q - 1)


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def _witness_dict(fam: EnumeratedFamily, i: int | None, gamma: float) -> dict | None:
    if i is None:
        return None
    R = fam[i]
    return {"index": int(i), "center": list(R.center_x) + [R.center_t],
            "L": R.L, "p": R.p, "gamma": gamma}


@dataclass
class ConstantReport:
    """A family supremum with the rectangle attaining it."""

    name: str
    value: float
    witness: int | None
    family: EnumeratedFamily = dc_field(repr=False)
    gamma: float = 0.0
    trace: np.ndarray | None = dc_field(default=None, repr=False)
    extra: dict = dc_field(default_factory=dict)

    @property
    def rectangle(self) -> ParabolicRectangle | None:
        return None if self.witness is None else self.family[self.witness]

    def as_dict(self, with_trace: bool = False) -> dict:
        out = {"name": self.name, "constant": self.value,
               "witness": _witness_dict(self.family, self.witness, self.gamma),
               "family": self.family.summary(), **self.extra}
        if with_trace and self.trace is not None:
            out["trace"] = self.trace
        return jsonable(out)


@dataclass
class CheckReport:
    """Outcome of an inequality audit over a family."""

    name: str
    passed: bool
    measured: dict
    violations: list = dc_field(default_factory=list)
    family: EnumeratedFamily | None = dc_field(default=None, repr=False)
    seed: int | None = None

    def as_dict(self) -> dict:
        return jsonable({"name": self.name, "passed": self.passed,
                         "measured": self.measured, "violations": self.violations,
                         "family": None if self.family is None else self.family.summary(),
                         "seed": self.seed})


def _sup(name: str, trace: np.ndarray, fam: EnumeratedFamily, gamma: float,
         keep_trace: bool, **extra) -> ConstantReport:
    # NaN never wins; an all-NaN trace has no witness
    if trace.size == 0 or np.all(np.isnan(trace)):
        return ConstantReport(name, math.nan, None, fam, gamma,
                              trace if keep_trace else None, extra)
    i = int(np.nanargmax(trace))
    return ConstantReport(name, float(trace[i]), i, fam, gamma,
                          trace if keep_trace else None, extra)


def _gamma(fam: EnumeratedFamily, gamma: float | None) -> float:
    return fam.gamma if gamma is None else check_lag(gamma)


def _roles(direction: str) -> tuple[str, str]:
    """(averaged part, future part) for the '+' class and its time mirror."""
    if direction == "+":
        return "-", "+"
    if direction == "-":
        return "+", "-"
    raise BadParams(f"direction must be '+' or '-', got {direction!r}")


def part_averages(f: ScalarField, fam: EnumeratedFamily, which: str,
                  gamma: float | None = None) -> np.ndarray:
    g = _gamma(fam, gamma)
    avgs = box_averages(f, *fam.parts(which, g))
    # an average lies between the extremes of the cells it sees; clipping
    # removes prefix-sum noise on flat regions
    views = fam.cell_views(which, g)
    lo = np.array([f.values[sl].min() for sl, _ in views])
    hi = np.array([f.values[sl].max() for sl, _ in views])
    return np.clip(avgs, lo, hi)


def part_minima(f: ScalarField, fam: EnumeratedFamily, which: str,
                gamma: float | None = None) -> np.ndarray:
    views = fam.cell_views(which, _gamma(fam, gamma))
    return np.array([f.values[sl].min() for sl, _ in views])


def _power_averages(w: ScalarField, s: float, fam, which, gamma) -> np.ndarray:
    """Averages of ``w**s`` over parts; +inf where the power overflows."""
    with np.errstate(over="ignore", divide="ignore"):
        vals = w.values ** s
    bad = ~np.isfinite(vals)
    if not bad.any():
        return part_averages(w.with_values(vals), fam, which, gamma)
    avgs = part_averages(w.with_values(np.where(bad, 0.0, vals)), fam, which, gamma)
    hits = part_averages(w.with_values(bad.astype(float)), fam, which, gamma)
    return np.where(hits > 0, np.inf, avgs)


# --- A_q and A_1 -----------------------------------------------------------

def aq_functionals(w: ScalarField, q: float, family=None, direction: str = "+",
                   gamma: float | None = None) -> np.ndarray:
    """Per-rectangle ``(avg_{R-} w)(avg_{R+} w^{1/(1-q)})^{q-1}`` (``'+'`` class).

    ``direction='-'`` swaps the roles of the parts (time axis reversed).
    """
    if not q > 1:
        raise ExponentRange(f"A_q needs q > 1, got {q}")
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    g = _gamma(fam, gamma)
    past, future = _roles(direction)
    a = part_averages(w, fam, past, g)
    b = _power_averages(w, 1.0 / (1.0 - q), fam, future, g)
    with np.errstate(over="ignore", invalid="ignore"):
        return a * b ** (q - 1)


def aq_constant(w: ScalarField, q: float, family=None, direction: str = "+",
                gamma: float | None = None, trace: bool = False) -> ConstantReport:
    """``[w]_{A_q^{±}(gamma)}`` over the family; ``q == 1`` defers to :func:`a1_constant`."""
    if q == 1:
        return a1_constant(w, family, direction, gamma, trace)
    fam = resolve_family(family, w.grid)
    g = _gamma(fam, gamma)
    vals = aq_functionals(w, q, fam, direction, g)
    return _sup(f"A_{q}{direction}", vals, fam, g, trace, q=q, direction=direction)


def aq_functional_at(w: ScalarField, q: float, R: ParabolicRectangle, gamma: float,
                     direction: str = "+") -> float:
    """Scalar recomputation of one rectangle's A_q functional (q == 1 allowed)."""
    up, lo = upper_part(R, gamma), lower_part(R, gamma)
    past, future = (lo, up) if direction == "+" else (up, lo)
    if q == 1:
        return box_average(w, past) / box_min(w, future)
    s = w.with_values(w.values ** (1.0 / (1.0 - q)))
    return box_average(w, past) * box_average(s, future) ** (q - 1)


def a1_functionals(w: ScalarField, family=None, direction: str = "+",
                   gamma: float | None = None) -> np.ndarray:
    """Per-rectangle ``avg_{R-} w / essinf_{R+} w`` (``'+'`` class)."""
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    g = _gamma(fam, gamma)
    past, future = _roles(direction)
    return part_averages(w, fam, past, g) / part_minima(w, fam, future, g)


def a1_constant(w: ScalarField, family=None, direction: str = "+",
                gamma: float | None = None, trace: bool = False) -> ConstantReport:
    fam = resolve_family(family, w.grid)
    g = _gamma(fam, gamma)
    vals = a1_functionals(w, fam, direction, g)
    return _sup(f"A_1{direction}", vals, fam, g, trace, q=1, direction=direction)


def a1_via_maximal(w: ScalarField, family=None, direction: str = "+") -> ConstantReport:
    """``max_z M^{gamma-} w(z) / w(z)`` over covered cells (``M^{gamma+}`` for ``'-'``)."""
    from .errors import UncoveredGrid

    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    res = maximal_backward(w, fam) if direction == "+" else maximal_forward(w, fam)
    if not res.covered.any():
        raise UncoveredGrid("no cell is covered by the family")
    ratio = np.where(res.covered, res.values / w.values, -np.inf)
    cell = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return ConstantReport(f"A_1{direction} via maximal", float(ratio[cell]),
                          int(res.witness[cell]), fam, fam.gamma,
                          extra={"cell": list(map(int, cell)),
                                 "covered_cells": int(res.covered.sum())})


def dual_weight(w: ScalarField, q: float) -> ScalarField:
    """``sigma = w^{1-q'} = w^{1/(1-q)}``."""
    if not q > 1:
        raise ExponentRange(f"dual weight needs q > 1, got {q}")
    w = as_weight(w)
    return w.with_values(w.values ** (1.0 / (1.0 - q)))


# --- closure under max/min ------------------------------------------------

def closure_check(w: ScalarField, v: ScalarField, q: float, family=None,
                  rtol: float = RTOL) -> CheckReport:
    """Audit ``[max(w,v)] <= [w] + [v]`` and the analogue for ``min(w,v)``.

    Both are checked per rectangle.  For the minimum with ``q > 1`` the sound
    per-rectangle bound is ``(F_w^{1/(q-1)} + F_v^{1/(q-1)})^{q-1}`` (via the
    dual weights); it is at most ``F_w + F_v`` when ``q <= 2``, where the
    plain sum bound is asserted too.
    """
    require_same_grid(w, v)
    w, v = as_weight(w), as_weight(v)
    fam = resolve_family(family, w.grid)
    hi = w.with_values(np.maximum(w.values, v.values))
    lo = w.with_values(np.minimum(w.values, v.values))
    func = (lambda f: a1_functionals(f, fam)) if q == 1 else (lambda f: aq_functionals(f, q, fam))
    Fw, Fv, Fmax, Fmin = func(w), func(v), func(hi), func(lo)
    if q == 1:
        bound_min = Fw + Fv
    else:
        r = q - 1
        bound_min = (Fw ** (1 / r) + Fv ** (1 / r)) ** r
    checks = {"max<=sum": (Fmax, Fw + Fv), "min<=dual_bound": (Fmin, bound_min)}
    if q <= 2:
        checks["min<=sum"] = (Fmin, Fw + Fv)
    violations = []
    for label, (lhs, rhs) in checks.items():
        bad = np.flatnonzero(~(lhs <= rhs * (1 + rtol)))
        for i in bad:
            violations.append({"check": label, "rectangle": _witness_dict(fam, i, fam.gamma),
                               "lhs": lhs[i], "rhs": rhs[i]})
    measured = {"q": q, "w": float(np.max(Fw)), "v": float(np.max(Fv)),
                "max": float(np.max(Fmax)), "min": float(np.max(Fmin)),
                "margin_max": float(np.min((Fw + Fv) - Fmax)),
                "margin_min": float(np.min(bound_min - Fmin))}
    return CheckReport("closure", not violations, measured, violations, fam)


# --- A_infinity conditions -------------------------------------------------

def _rect_data(w: ScalarField, fam: EnumeratedFamily, gamma: float):
    """Past averages, future part volumes and future cell views."""
    avg_past = part_averages(w, fam, "-", gamma)
    lo, hi = fam.parts("+", gamma)
    vol_future = np.prod(hi - lo, axis=1)
    lo_m, hi_m = fam.parts("-", gamma)
    vol_past = np.prod(hi_m - lo_m, axis=1)
    return avg_past, vol_past, vol_future, fam.cell_views("+", gamma)


def _fsum(a: np.ndarray) -> float:
    return math.fsum(a.ravel())


def sublevel_fractions(w: ScalarField, beta: float, family=None,
                       gamma: float | None = None) -> np.ndarray:
    """Per rectangle ``|R+ ∩ {w < beta w_{R-}}| / |R+|``."""
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    g = _gamma(fam, gamma)
    avg_past, _, vol_future, views = _rect_data(w, fam, g)
    out = np.empty(len(fam))
    for i, (sl, wts) in enumerate(views):
        out[i] = _fsum(wts[w.values[sl] < beta * avg_past[i]]) / vol_future[i]
    return out


def _generated_sets(vals: np.ndarray, avg_past: float, betas, n_random: int, rng):
    """Whole part, sublevel sets, then seeded random cell unions."""
    yield "whole", np.ones(vals.shape, dtype=bool)
    for b in betas:
        yield f"sublevel beta={b}", vals < b * avg_past
    for k in range(n_random):
        yield f"random {k}", rng.random(vals.shape) < rng.random()


def quantitative_measure_check(w: ScalarField, K: float, delta: float, family=None,
                               betas: Sequence[float] = DEFAULT_BETAS,
                               n_random: int = 8, seed: int = 0,
                               rtol: float = RTOL) -> CheckReport:
    """``|E|/|R+| <= K (w(E)/w(R-))^delta`` over generated sets ``E ⊂ R+``.

    Sets per rectangle: the whole upper part, the sublevel sets
    ``{w < beta w_{R-}}`` for each ``beta``, and ``n_random`` seeded random
    unions of the cells meeting the upper part (intersected with it).
    """
    if not K > 0 or not delta > 0:
        raise BadParams("K and delta must be positive")
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    g = fam.gamma
    avg_past, vol_past, vol_future, views = _rect_data(w, fam, g)
    rng = np.random.default_rng(seed)
    worst, worst_at, n_sets = 0.0, None, 0
    violations = []
    for i, (sl, wts) in enumerate(views):
        vals = w.values[sl]
        wmass = vals * wts
        w_past = avg_past[i] * vol_past[i]
        for label, m in _generated_sets(vals, avg_past[i], betas, n_random, rng):
            n_sets += 1
            size = _fsum(wts[m])
            if size == 0:
                continue
            ratio = (size / vol_future[i]) / (_fsum(wmass[m]) / w_past) ** delta
            if ratio > worst:
                worst, worst_at = ratio, (i, label)
            if not ratio <= K * (1 + rtol):
                violations.append({"rectangle": _witness_dict(fam, i, g), "set": label,
                                   "ratio": ratio})
    measured = {"K": K, "delta": delta, "worst_ratio": worst, "sets_tested": n_sets,
                "witness": None if worst_at is None else
                {"rectangle": _witness_dict(fam, worst_at[0], g), "set": worst_at[1]}}
    return CheckReport("quantitative_measure", not violations, measured, violations, fam, seed)


def sublevel_measure_consistency(w: ScalarField, beta: float, family=None,
                                 beta_prime: float | None = None,
                                 betas: Sequence[float] = DEFAULT_BETAS,
                                 n_random: int = 8, seed: int = 0,
                                 rtol: float = RTOL) -> CheckReport:
    """Link the sublevel condition at ``beta`` with the measure condition.

    Per rectangle with ``a_R = |R+ ∩ {w < beta w_{R-}}| / |R+|`` and every
    generated ``E ⊂ R+``::

        |E| <= a_R |R+| + w(E) / (beta w_{R-})

    so with ``alpha = max_R a_R`` and ``beta' < (1 - alpha) beta`` every ``E``
    with ``w(E) < beta' w(R-)`` has ``|E| < (alpha + beta'/beta) |R+|``.
    Conversely the sublevel set itself has ``w(E) <= beta w(R-)``.
    ``beta_prime`` defaults to ``(1 - alpha) beta / 2``.
    """
    if not 0 < beta < 1:
        raise BadParams("beta must lie in (0, 1)")
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    g = fam.gamma
    avg_past, vol_past, vol_future, views = _rect_data(w, fam, g)
    frac = sublevel_fractions(w, beta, fam)
    alpha = float(frac.max())
    bp = (1 - alpha) * beta / 2 if beta_prime is None else float(beta_prime)
    alpha_prime = alpha + bp / beta
    rng = np.random.default_rng(seed)
    violations, n_sets, n_small = [], 0, 0
    for i, (sl, wts) in enumerate(views):
        vals = w.values[sl]
        wmass = vals * wts
        w_past = avg_past[i] * vol_past[i]
        sub = vals < beta * avg_past[i]
        sub_mass = _fsum(wmass[sub])
        if not sub_mass <= beta * w_past * (1 + rtol):
            violations.append({"step": "sublevel mass", "rectangle": _witness_dict(fam, i, g),
                               "mass": sub_mass, "bound": beta * w_past})
        for label, m in _generated_sets(vals, avg_past[i], betas, n_random, rng):
            n_sets += 1
            size, mass = _fsum(wts[m]), _fsum(wmass[m])
            bound = frac[i] * vol_future[i] + mass / (beta * avg_past[i])
            if not size <= bound * (1 + rtol):
                violations.append({"step": "split", "set": label, "size": size, "bound": bound,
                                   "rectangle": _witness_dict(fam, i, g)})
            if mass < bp * w_past:
                n_small += 1
                if alpha_prime < 1 and not size <= alpha_prime * vol_future[i] * (1 + rtol):
                    violations.append({"step": "family", "set": label,
                                       "fraction": size / vol_future[i],
                                       "rectangle": _witness_dict(fam, i, g)})
    measured = {"beta": beta, "alpha": alpha, "beta_prime": bp, "alpha_prime": alpha_prime,
                "sets_tested": n_sets, "small_mass_sets": n_small}
    return CheckReport("sublevel_measure", not violations, measured, violations, fam, seed)


def sublevel_condition(w: ScalarField, alpha: float, beta: float, family=None) -> CheckReport:
    """``|R+ ∩ {w < beta w_{R-}}| < alpha |R+|`` for every rectangle.

    ``measured['min_alpha']`` is the largest fraction seen; the condition
    holds for exactly the ``alpha`` strictly above it.
    """
    if not (0 < alpha < 1 and 0 < beta < 1):
        raise BadParams("alpha and beta must lie in (0, 1)")
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    frac = sublevel_fractions(w, beta, fam)
    bad = np.flatnonzero(~(frac < alpha))
    violations = [{"rectangle": _witness_dict(fam, i, fam.gamma), "fraction": frac[i]}
                  for i in bad]
    i = int(np.argmax(frac))
    measured = {"alpha": alpha, "beta": beta, "min_alpha": float(frac[i]),
                "witness": _witness_dict(fam, i, fam.gamma)}
    return CheckReport("sublevel", not violations, measured, violations, fam)


def gr_functionals(w: ScalarField, family=None, gamma: float | None = None) -> np.ndarray:
    """Per rectangle ``avg_{R+} (w - w_{R-})^- / w_{R-}``."""
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    g = _gamma(fam, gamma)
    avg_past, _, vol_future, views = _rect_data(w, fam, g)
    out = np.empty(len(fam))
    for i, (sl, wts) in enumerate(views):
        neg = np.maximum(avg_past[i] - w.values[sl], 0.0)
        out[i] = _fsum(neg * wts) / vol_future[i] / avg_past[i]
    return out


def gurov_reshetnyak(w: ScalarField, family=None, trace: bool = False) -> ConstantReport:
    fam = resolve_family(family, w.grid)
    vals = gr_functionals(w, fam)
    rep = _sup("Gurov-Reshetnyak", vals, fam, fam.gamma, trace)
    rep.extra["below_one"] = bool(rep.value < 1)
    return rep


def gr_implication_check(w: ScalarField, family=None, eps: float | None = None,
                         lambdas: Iterable[float] = (0.3, 0.5, 0.9),
                         betas: Iterable[float] = (0.25, 0.5, 0.75),
                         rtol: float = RTOL) -> CheckReport:
    """Both rectangle-wise implications between the GR and sublevel conditions.

    (a) If ``avg_{R+}(w - w_{R-})^- <= eps w_{R-}`` then for ``eps < lam < 1``
        ``|R+ ∩ {w < (1 - eps/lam) w_{R-}}| < lam |R+|``.  Checked with the
        family ``eps`` (measured if not given) and with each rectangle's own.
    (b) If ``|R+ ∩ {w < beta w_{R-}}| <= (1 - alpha)|R+|`` then
        ``avg_{R+}(w - w_{R-})^- <= (1 - alpha beta) w_{R-}``.  Checked with
        each rectangle's own ``alpha`` and with the family-level ``alpha``.
    """
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    g = fam.gamma
    avg_past, _, vol_future, views = _rect_data(w, fam, g)
    eps_r = gr_functionals(w, fam)
    eps_f = float(eps_r.max()) if eps is None else float(eps)
    lambdas = [float(x) for x in lambdas]
    betas = [float(b) for b in betas]
    violations = []
    checked = 0

    for i, (sl, wts) in enumerate(views):
        vals = w.values[sl]
        for lam in lambdas:
            for label, e in (("family eps", eps_f), ("own eps", eps_r[i])):
                if not e < lam < 1:
                    continue
                checked += 1
                meas = _fsum(wts[vals < (1 - e / lam) * avg_past[i]])
                if not meas <= lam * vol_future[i] * (1 + rtol):
                    violations.append({"direction": "GR=>sublevel", "eps": label,
                                       "lambda": lam, "rectangle": _witness_dict(fam, i, g),
                                       "fraction": meas / vol_future[i]})

    fam_alpha = {}
    for beta in betas:
        frac = sublevel_fractions(w, beta, fam)
        fam_alpha[beta] = 1.0 - float(frac.max())
        for i in range(len(fam)):
            for label, a in (("own alpha", 1.0 - frac[i]), ("family alpha", fam_alpha[beta])):
                if not a > 0:
                    continue
                checked += 1
                if not eps_r[i] <= (1 - a * beta) * (1 + rtol):
                    violations.append({"direction": "sublevel=>GR", "alpha": label,
                                       "beta": beta, "rectangle": _witness_dict(fam, i, g),
                                       "gr": eps_r[i], "bound": 1 - a * beta})

    measured = {"eps": eps_f, "lambdas_used": [x for x in lambdas if eps_f < x < 1],
                "family_alpha": {str(b): a for b, a in fam_alpha.items()},
                "checks": checked}
    return CheckReport("gr_implications", not violations, measured, violations, fam)


# --- reverse Hölder ---------------------------------------------------------

def _rhi_parts(fam: EnumeratedFamily, alpha: float, tau: float):
    """Past ``R-(alpha)`` and future ``S+(alpha)`` corners, restricted to the domain."""
    lo_p, hi_p = fam.parts("-", alpha)
    shift = tau * (1 - alpha) * fam.L ** fam.p
    if alpha == 0 and tau == 1:
        lo_f, hi_f = fam.parts("+", 0.0)
        keep = np.ones(len(fam), dtype=bool)
    else:
        lo_f, hi_f = lo_p.copy(), hi_p.copy()
        lo_f[:, -1] += shift
        hi_f[:, -1] += shift
        dom = fam.grid.domain
        keep = (hi_f[:, -1] <= dom.upper[-1]) & (lo_f[:, -1] >= dom.lower[-1])
    return lo_p, hi_p, lo_f, hi_f, keep


def rhi_ratios(w: ScalarField, eps: float, family=None, alpha: float = 0.0,
               tau: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Per rectangle ``(avg_{R-(alpha)} w^{1+eps})^{1/(1+eps)} / avg_{S+(alpha)} w``.

    With the defaults this is the unlagged pair ``R-``, ``R+``.  Rectangles
    whose translated part leaves the domain get NaN; the mask of kept
    rectangles is returned alongside.
    """
    if not eps >= 0:
        raise BadParams("eps must be nonnegative")
    if not tau > 0:
        raise BadParams("tau must be positive")
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    alpha = check_lag(alpha)
    lo_p, hi_p, lo_f, hi_f, keep = _rhi_parts(fam, alpha, tau)
    out = np.full(len(fam), np.nan)
    if not keep.any():
        return out, keep
    with np.errstate(over="ignore"):
        pw = w.values ** (1 + eps)
    if not np.all(np.isfinite(pw)):
        raise BadParams("w**(1+eps) overflows; lower eps")
    lhs = box_averages(w.with_values(pw), lo_p[keep], hi_p[keep]) ** (1 / (1 + eps))
    rhs = box_averages(w, lo_f[keep], hi_f[keep])
    out[keep] = lhs / rhs
    return out, keep


def reverse_holder(w: ScalarField, eps: float, c: float, family=None, alpha: float = 0.0,
                   tau: float = 1.0, rtol: float = RTOL) -> CheckReport:
    """Check ``(avg_{R-} w^{1+eps})^{1/(1+eps)} <= c avg_{R+} w`` on every rectangle.

    Parts carry no time lag by default; ``alpha``/``tau`` select the lagged,
    translated variant with ``S+(alpha) = R-(alpha) + (0, tau (1-alpha) L^p)``.
    """
    if not c > 0 or not eps > 0:
        raise BadParams("eps and c must be positive")
    fam = resolve_family(family, w.grid)
    ratios, keep = rhi_ratios(w, eps, fam, alpha, tau)
    bad = np.flatnonzero(keep & ~(ratios <= c * (1 + rtol)))
    violations = [{"rectangle": _witness_dict(fam, i, alpha), "ratio": ratios[i]} for i in bad]
    measured = {"eps": eps, "c": c, "alpha": alpha, "tau": tau,
                "min_c": float(np.nanmax(ratios)) if keep.any() else math.nan,
                "rectangles_used": int(keep.sum()), "rectangles_skipped": int((~keep).sum())}
    return CheckReport("reverse_holder", not violations, measured, violations, fam)


def rhi_search(w: ScalarField, c_values: Iterable[float], family=None, eps_max: float = 4.0,
               tol: float = 1e-6, alpha: float = 0.0, tau: float = 1.0) -> list[dict]:
    """For each ``c`` the largest ``eps <= eps_max`` with the RHI holding on the family.

    The worst ratio is nondecreasing in ``eps`` (power means increase), so
    bisection is valid.  ``eps`` is ``None`` when even ``eps -> 0`` fails.
    """
    fam = resolve_family(family, w.grid)

    def worst(e):
        r, keep = rhi_ratios(w, e, fam, alpha, tau)
        return float(np.nanmax(r)) if keep.any() else math.nan

    base, top = worst(0.0), worst(eps_max)
    out = []
    for c in c_values:
        c = float(c)
        if not base <= c * (1 + RTOL):
            out.append({"c": c, "eps": None})
            continue
        if top <= c * (1 + RTOL):
            out.append({"c": c, "eps": eps_max})
            continue
        a, b = 0.0, eps_max
        while b - a > tol:
            mid = 0.5 * (a + b)
            if worst(mid) <= c * (1 + RTOL):
                a = mid
            else:
                b = mid
        out.append({"c": c, "eps": a})
    return out


def self_improvement(w: ScalarField, q: float, family=None,
                     eps_grid: Iterable[float] = (0.05, 0.1, 0.2, 0.3, 0.5),
                     threshold: float | None = None) -> dict:
    """Tabulate ``[w]_{A_{q-eps}}`` and pick the largest admissible ``eps``.

    ``threshold`` defaults to twice ``[w]_{A_q}``.
    """
    fam = resolve_family(family, w.grid)
    base = aq_constant(w, q, fam).value
    thr = 2 * base if threshold is None else float(threshold)
    rows = []
    best = None
    for e in sorted(float(x) for x in eps_grid):
        if not q - e > 1:
            continue
        val = aq_constant(w, q - e, fam).value
        rows.append({"eps": e, "exponent": q - e, "constant": val})
        if math.isfinite(val) and val <= thr:
            best = e
    return jsonable({"q": q, "base_constant": base, "threshold": thr, "table": rows,
                     "best_eps": best, "family": fam.summary()})


# --- weighted norm inequalities ---------------------------------------------

def _cellvol(grid) -> float:
    return grid.cell_volume


def weak_type_ratio(f: ScalarField, w: ScalarField, q: float, family=None,
                    lambdas: Iterable[float] | None = None, n_lambdas: int = 64) -> dict:
    """``max_lambda lambda^q w({M^{gamma+} f > lambda}) / ∫ |f|^q w``.

    The superlevel set only contains covered cells; the denominator runs over
    the whole grid.  ``lambdas`` defaults to a geometric ladder between the
    minimum and maximum of ``M^{gamma+} f`` on covered cells.
    """
    if not q >= 1:
        raise ExponentRange("weak type needs q >= 1")
    require_same_grid(f, w)
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    vol = _cellvol(w.grid)
    denom = math.fsum((np.abs(f.values) ** q * w.values * vol).ravel())
    if denom == 0:
        raise ZeroIntegrand("∫|f|^q w vanishes")
    M = maximal_forward(f, fam)
    cov = M.covered
    if lambdas is None:
        mv = M.values[cov]
        lo, hi = float(mv.min()), float(mv.max())
        lambdas = np.geomspace(lo, hi, n_lambdas) if lo > 0 else np.linspace(0, hi, n_lambdas)[1:]
    best, best_lam, table = 0.0, None, []
    for lam in lambdas:
        lam = float(lam)
        sel = cov & (np.nan_to_num(M.values, nan=-np.inf) > lam)
        wm = math.fsum((w.values[sel] * vol).ravel())
        r = lam ** q * wm / denom
        table.append((lam, r))
        if r > best:
            best, best_lam = r, lam
    return {"ratio": best, "lambda": best_lam, "q": q, "denominator": denom,
            "table": table, "maximal": M}


def strong_type_ratio(f: ScalarField, w: ScalarField, q: float, family=None) -> dict:
    """``∫ (M^{gamma+} f)^q w / ∫ |f|^q w`` with both integrals over covered cells.

    When ``f`` lives only on uncovered cells the ratio is ``inf`` (or 0 if
    the maximal function vanishes too).
    """
    if not q > 1:
        raise ExponentRange("strong type needs q > 1")
    require_same_grid(f, w)
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    vol = _cellvol(w.grid)
    M = maximal_forward(f, fam)
    cov = M.covered
    num = math.fsum((M.values[cov] ** q * w.values[cov] * vol).ravel())
    fw = np.abs(f.values) ** q * w.values * vol
    if not np.any(fw > 0):
        raise ZeroIntegrand("∫|f|^q w vanishes")
    den = math.fsum(fw[cov].ravel())
    ratio = num / den if den > 0 else (math.inf if num > 0 else 0.0)
    return {"ratio": ratio, "q": q, "numerator": num, "denominator": den,
            "covered_cells": int(cov.sum()), "maximal": M}


def _aligned(grid, box: SpaceTimeBox) -> bool:
    return all(np.any(e == a) and np.any(e == b)
               for e, a, b in zip(grid.edges, box.lower, box.upper))


def extremal_weak_type(w: ScalarField, q: float, index: int, family=None,
                       shrink: float = 1e-12) -> dict:
    """Weak-type ratio of ``f = sigma chi_{R+(gamma)}`` against the A_q functional at ``R``.

    ``R`` is family member ``index``; its upper part must be a union of whole
    cells.  Every cell of ``R-(gamma)`` has ``M^{gamma+} f >= avg_{R+} sigma``,
    so at ``lambda = (1 - shrink) avg_{R+} sigma`` the ratio is at least
    ``(1 - shrink)^q`` times the functional.
    """
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    box = fam.part_box(index, "+")
    if not _aligned(w.grid, box):
        raise BadParams("upper part of the chosen rectangle is not cell-aligned")
    sigma = dual_weight(w, q)
    sl = tuple(slice(int(np.searchsorted(e, a)), int(np.searchsorted(e, b)))
               for e, a, b in zip(w.grid.edges, box.lower, box.upper))
    fvals = np.zeros(w.grid.shape)
    fvals[sl] = sigma.values[sl]
    f = w.with_values(fvals)
    avg = box_average(sigma, box)
    weak = weak_type_ratio(f, w, q, fam, lambdas=[avg * (1 - shrink)])
    functional = float(aq_functionals(w, q, fam)[index])
    return {"ratio": weak["ratio"], "functional": functional, "lambda": weak["lambda"],
            "index": index, "f": f}
