"""Weight construction: Rubio de Francia factorization and Coifman-Rochberg weights.

Maximal functions on a finite family leave some cells uncovered.  Two
conventions handle that:

* inside the Rubio de Francia operator an uncovered maximal term is
  replaced by the pointwise value of its argument, which keeps the
  operator sublinear, positively homogeneous and equal to 2 on ``f = 1``
  when ``w = 1``;
* Coifman-Rochberg fields are cropped to the covered cells, which must
  form a box (:class:`UncoveredGrid` otherwise).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (CZero, DivergentSeries, ExponentRange, RHIFailure, UncoveredGrid)
from .field import Grid, ScalarField, as_weight, require_same_grid, time_reverse
from .maximal import (EnumeratedFamily, maximal_backward, maximal_forward,
                      resolve_family)
from .weights import (CheckReport, a1_constant, aq_constant, aq_functionals,
                      a1_functionals, conjugate, dual_weight, jsonable, rhi_ratios,
                      rhi_search)

CERT_RTOL = 1e-9
TAIL_GATE = 1e-9
# b = w / M and b M each round once, so b M = w holds to two roundings
RECON_TOL = 2.0 ** -52


def covered_box(mask: np.ndarray) -> tuple[slice, ...]:
    """Slices of the covered cells; they must fill their bounding box."""
    if not mask.any():
        raise UncoveredGrid("no cell is covered by the family")
    sl = []
    for axis in range(mask.ndim):
        other = tuple(a for a in range(mask.ndim) if a != axis)
        hit = np.flatnonzero(mask.any(axis=other))
        sl.append(slice(int(hit[0]), int(hit[-1]) + 1))
    sl = tuple(sl)
    if not mask[sl].all():
        raise UncoveredGrid("covered cells do not form a box")
    return sl


def crop_grid(grid: Grid, sl: tuple[slice, ...]) -> Grid:
    origin = tuple(float(e[s.start]) for e, s in zip(grid.edges, sl))
    shape = tuple(s.stop - s.start for s in sl)
    return Grid(shape, grid.spacing, origin, grid.p)


def crop(f: ScalarField, sl: tuple[slice, ...]) -> ScalarField:
    return ScalarField(crop_grid(f.grid, sl), f.values[sl])


# --- Rubio de Francia --------------------------------------------------------

def _max_or_self(res, g: np.ndarray) -> np.ndarray:
    return np.where(res.covered, res.values, np.abs(g))


def rdf_operator_T(f: ScalarField, w: ScalarField, q: float, family=None) -> ScalarField:
    """``(w^{-1/q} M^-(w^{1/q} f^{q-1}))^{1/(q-1)} + w^{1/q} M^+(w^{-1/q} f)``.

    Uncovered maximal terms fall back to the pointwise value of their argument.
    """
    if not q >= 2:
        raise ExponentRange(f"the operator is used for q >= 2, got {q}")
    require_same_grid(f, w)
    w = as_weight(w)
    if np.any(f.values < 0):
        raise ExponentRange("the operator acts on nonnegative functions")
    fam = resolve_family(family, w.grid)
    wq = w.values ** (1.0 / q)
    g1 = wq * f.values ** (q - 1)
    m1 = _max_or_self(maximal_backward(f.with_values(g1), fam), g1)
    g2 = f.values / wq
    m2 = _max_or_self(maximal_forward(f.with_values(g2), fam), g2)
    return f.with_values((m1 / wq) ** (1.0 / (q - 1)) + wq * m2)


def _qnorm(x: np.ndarray, q: float) -> float:
    return float(np.sum(x ** q)) ** (1.0 / q)


@dataclass
class FactorizationResult:
    u: ScalarField
    v: ScalarField
    eta: ScalarField
    c_used: float
    tail_bound: float
    q: float
    gamma: float
    route: str = "direct"
    growth: list = dc_field(default_factory=list)
    certificates: dict = dc_field(default_factory=dict)
    family: EnumeratedFamily | None = dc_field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.certificates.values())

    def as_dict(self) -> dict:
        return jsonable({"q": self.q, "gamma": self.gamma, "route": self.route,
                         "c_used": self.c_used, "tail_bound": self.tail_bound,
                         "growth": self.growth, "certificates": self.certificates,
                         "passed": self.passed,
                         "family": None if self.family is None else self.family.summary()})


def _series(w, q, fam, f0, c, K):
    T = lambda x: rdf_operator_T(x, w, q, fam)
    iterates = [f0]
    for _ in range(K + 1):
        iterates.append(T(iterates[-1]))
    norms = [_qnorm(x.values, q) for x in iterates]
    growth = [b / a for a, b in zip(norms[:-1], norms[1:])]
    if c is None:
        c = 1.1 * max(growth[:K])
    c = float(c)
    if not c > 0:
        raise CZero(f"series constant must be positive, got {c}")
    eta = np.zeros(w.grid.shape)
    for k in range(1, K + 1):
        eta += (2 * c) ** (-k) * iterates[k].values
    # the K+1-th term bounds what truncation drops from T(eta)
    tail = (2 * c) ** (-K) * iterates[K + 1].values
    rel_tail = float(np.max(tail / (2 * c * eta)))
    scaled = [(2 * c) ** (-k) * norms[k] for k in range(1, K + 2)]
    if not rel_tail < TAIL_GATE or not scaled[-1] < scaled[max(0, len(scaled) - 4)]:
        raise DivergentSeries(f"series tail {rel_tail:.3e} fails the gate with c = {c}")
    return w.with_values(eta), c, tail, rel_tail, growth


def _ratio_cert(M, base: np.ndarray, bound: float) -> dict:
    cov = M.covered
    if not cov.any():
        return {"bound": bound, "max_ratio": math.nan, "passed": True}
    r = float(np.max(M.values[cov] / base[cov]))
    return {"bound": bound, "max_ratio": r, "passed": r <= bound * (1 + CERT_RTOL)}


def rdf_factorize(w: ScalarField, q: float, family=None, f0: ScalarField | None = None,
                  c: float | None = None, K: int = 32) -> FactorizationResult:
    """Factor ``w = u v^{1-q}`` with ``u`` in the ``+`` and ``v`` in the ``-`` A_1 class.

    ``eta = sum_{k=1}^K (2c)^{-k} T^k f0``, ``u = w^{1/q} eta^{q-1}`` and
    ``v = w^{-1/q} eta``.  ``c`` defaults to 1.1 times the largest growth
    ratio of the discrete ``q``-norm over the iterates.  For ``1 < q < 2`` the
    dual weight is factored with time reversed and the factors are swapped
    back.  Certificates are checked a posteriori on covered cells.
    """
    if not q > 1:
        raise ExponentRange(f"factorization needs q > 1, got {q}")
    if c is not None and not c > 0:
        raise CZero(f"series constant must be positive, got {c}")
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    if q < 2:
        qq = conjugate(q)
        sigma_r = time_reverse(dual_weight(w, q))
        g0 = None if f0 is None else time_reverse(f0)
        inner = rdf_factorize(sigma_r, qq, fam.reflect_time(), g0, c, K)
        u, v = time_reverse(inner.v), time_reverse(inner.u)
        eta = time_reverse(inner.eta)
        res = FactorizationResult(u, v, eta, inner.c_used, inner.tail_bound, q, fam.gamma,
                                  "dual", inner.growth, family=fam)
        two_c = 2 * inner.c_used
        bounds = (two_c, two_c ** (qq - 1))
    else:
        f0 = w.with_values(np.ones(w.grid.shape)) if f0 is None else f0
        if np.any(f0.values <= 0):
            raise ExponentRange("starting function must be positive")
        eta, c_used, tail, rel_tail, growth = _series(w, q, fam, f0, c, K)
        wq = w.values ** (1.0 / q)
        u = w.with_values(wq * eta.values ** (q - 1))
        v = w.with_values(eta.values / wq)
        res = FactorizationResult(u, v, eta, c_used, rel_tail, q, fam.gamma, "direct",
                                  growth, family=fam)
        Teta = rdf_operator_T(eta, w, q, fam).values
        r = float(np.max(Teta / (2 * c_used * eta.values + tail)))
        res.certificates["T_eta"] = {"bound": 1.0, "max_ratio": r,
                                     "passed": r <= 1 + CERT_RTOL}
        bounds = ((2 * c_used) ** (q - 1), 2 * c_used)
    res.certificates["maximal_u"] = _ratio_cert(maximal_backward(res.u, fam),
                                                res.u.values, bounds[0])
    res.certificates["maximal_v"] = _ratio_cert(maximal_forward(res.v, fam),
                                                res.v.values, bounds[1])
    recon = res.u.values * res.v.values ** (1 - q)
    err = float(np.max(np.abs(recon / w.values - 1)))
    res.certificates["reconstruction"] = {"bound": 1e-12, "max_ratio": err,
                                          "passed": err <= 1e-12}
    return res


def jones_synthesize(u: ScalarField, v: ScalarField, q: float, family=None,
                     rtol: float = 1e-12) -> tuple[ScalarField, CheckReport]:
    """Build ``w = u v^{1-q}`` and audit ``F_w(R) <= F1+_u(R) F1-_v(R)^{q-1}``.

    The per-rectangle bound implies ``[w] <= [u]_{A_1+} [v]_{A_1-}^{q-1}``
    on the family, which is asserted as well.
    """
    require_same_grid(u, v)
    u, v = as_weight(u), as_weight(v)
    fam = resolve_family(family, u.grid)
    w = u.with_values(u.values * v.values ** (1 - q))
    Fw = aq_functionals(w, q, fam) if q > 1 else a1_functionals(w, fam)
    Fu = a1_functionals(u, fam, "+")
    Fv = a1_functionals(v, fam, "-")
    per_rect = Fu * Fv ** (q - 1)
    fam_bound = float(Fu.max() * Fv.max() ** (q - 1))
    bad = np.flatnonzero(~(Fw <= per_rect * (1 + rtol)))
    violations = [{"index": int(i), "functional": Fw[i], "bound": per_rect[i]} for i in bad]
    measured = {"q": q, "constant": float(Fw.max()), "u_A1": float(Fu.max()),
                "v_A1_minus": float(Fv.max()), "product_bound": fam_bound}
    passed = not violations and measured["constant"] <= fam_bound * (1 + rtol)
    return w, CheckReport("jones", passed, measured, violations, fam)


# --- Coifman-Rochberg ----------------------------------------------------------

def cr_build(f: ScalarField, delta: float, family=None) -> ScalarField:
    """``(M^- f)^delta`` on the covered cells (cropped grid)."""
    if not 0 < delta < 1:
        raise ExponentRange(f"delta must lie in (0, 1), got {delta}")
    fam = resolve_family(family, f.grid)
    M = maximal_backward(f, fam)
    sl = covered_box(M.covered)
    return ScalarField(crop_grid(f.grid, sl), M.values[sl] ** delta)


@dataclass
class CRResult:
    f_source: ScalarField
    delta: float
    b: ScalarField
    maximal_power: ScalarField
    bounds: tuple[float, float]
    eps: float
    window: tuple = ()

    @property
    def sandwich(self) -> float:
        return self.bounds[1] / self.bounds[0]

    def as_dict(self) -> dict:
        return jsonable({"delta": self.delta, "eps": self.eps, "b_min": self.bounds[0],
                         "b_max": self.bounds[1], "sandwich": self.sandwich,
                         "window": [[s.start, s.stop] for s in self.window]})


def cr_decompose(w: ScalarField, eps: float | None = None, family=None,
                 c: float | None = None, eps_max: float = 4.0) -> CRResult:
    """Write ``w = b (M^- f)^delta`` with ``f = w^{1+eps}``, ``delta = 1/(1+eps)``.

    Without ``eps`` a reverse Hölder search picks the largest passing
    exponent for ``c`` (default: twice the worst ``eps = 0`` ratio).
    ``b`` and the maximal power live on the covered cells.
    """
    w = as_weight(w)
    fam = resolve_family(family, w.grid)
    if eps is None:
        if c is None:
            r0, keep = rhi_ratios(w, 0.0, fam)
            c = 2 * float(np.nanmax(r0))
        found = rhi_search(w, [c], fam, eps_max=eps_max)[0]["eps"]
        if not found:
            raise RHIFailure(f"no reverse Hölder exponent passes with c = {c}")
        eps = found
    if not eps > 0:
        raise RHIFailure("eps must be positive")
    delta = 1.0 / (1.0 + eps)
    f = w.with_values(w.values ** (1.0 + eps))
    M = maximal_backward(f, fam)
    sl = covered_box(M.covered)
    grid = crop_grid(w.grid, sl)
    mp = M.values[sl] ** delta
    b = w.values[sl] / mp
    return CRResult(f, delta, ScalarField(grid, b), ScalarField(grid, mp),
                    (float(b.min()), float(b.max())), float(eps), sl)


def aq_generator(f: ScalarField, g: ScalarField, delta: float, q: float,
                 family=None) -> ScalarField:
    """``(M^- f)^delta (M^+ g)^{delta (1-q)}`` on the commonly covered cells."""
    if not 0 < delta < 1:
        raise ExponentRange(f"delta must lie in (0, 1), got {delta}")
    if not q > 1:
        raise ExponentRange(f"q must exceed 1, got {q}")
    require_same_grid(f, g)
    fam = resolve_family(family, f.grid)
    Mf = maximal_backward(f, fam)
    Mg = maximal_forward(g, fam)
    sl = covered_box(Mf.covered & Mg.covered)
    vals = Mf.values[sl] ** delta * Mg.values[sl] ** (delta * (1 - q))
    return ScalarField(crop_grid(f.grid, sl), vals)


def audit_generated(w: ScalarField, q: float, family=None):
    """Measured A_q (or A_1 when ``q == 1``) constant of a generated weight."""
    return a1_constant(w, family) if q == 1 else aq_constant(w, q, family)
