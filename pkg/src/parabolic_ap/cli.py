"""Command-line front end.

Exit codes: 0 when every asserted inequality holds, 2 when a check finds a
violation, 1 for I/O or parameter errors.  Reports are JSON with sorted
keys, so the same configuration and inputs give byte-identical output
unless ``--timestamp`` is passed.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BadParams, ParabolicError
from .factor import RECON_TOL, cr_decompose, rdf_factorize
from .field import Grid, ScalarField, as_weight
from .maximal import RectangleFamily, enumerate_family, maximal_backward, maximal_forward
from .pwf import read_csv_field, read_pwf, write_csv_field, write_pwf
from .weights import (a1_constant, a1_via_maximal, aq_constant, extremal_weak_type,
                      gr_implication_check, gurov_reshetnyak, jsonable,
                      quantitative_measure_check, reverse_holder, rhi_search,
                      strong_type_ratio, sublevel_condition, weak_type_ratio)

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2
TOOL = "parabolic-ap"
GEN_KINDS = ("constant", "exp-time", "power-time", "monotone-random", "checkerboard",
             "spike", "lognormal")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise BadParams(message)


# --- field generation --------------------------------------------------------

def generate(kind: str, grid: Grid, value: float = 1.0, rate: float = 1.0,
             exponent: float = 1.0, offset: float = 1.0, low: float = 1.0,
             high: float = 2.0, height: float = 100.0, sigma: float = 0.5,
             seed: int = 0) -> ScalarField:
    """Sample one of the built-in field kinds at cell midpoints."""
    mesh = grid.mesh()
    t = mesh[-1]
    rng = np.random.default_rng(seed)
    if kind == "constant":
        vals = np.full(grid.shape, float(value))
    elif kind == "exp-time":
        vals = np.exp(rate * t)
    elif kind == "power-time":
        base = t - grid.domain.lower[-1] + offset
        if not np.all(base > 0):
            raise BadParams("power-time needs a positive offset")
        vals = base ** exponent
    elif kind == "monotone-random":
        # positive increments along t, independent per spatial column
        steps = rng.exponential(1.0, size=grid.shape) * grid.spacing[-1]
        vals = low + np.cumsum(steps, axis=-1)
    elif kind == "checkerboard":
        parity = sum(np.indices(grid.shape)) % 2
        vals = np.where(parity == 0, low, high)
    elif kind == "spike":
        vals = np.full(grid.shape, float(value))
        vals[tuple(s // 2 for s in grid.shape)] = height
    elif kind == "lognormal":
        vals = np.exp(sigma * rng.standard_normal(grid.shape))
    else:
        raise BadParams(f"unknown kind {kind!r}")
    return ScalarField(grid, vals)


# --- shared plumbing ---------------------------------------------------------

def _family(args) -> RectangleFamily:
    return RectangleFamily(p=args.p, gamma=args.gamma, L_min=args.l_min, ratio=args.ratio,
                           n_scales=args.scales, stride_x=args.stride_x,
                           stride_t=args.stride_t)


def _load(path: str, args) -> ScalarField:
    if path.endswith(".csv"):
        if args.spacing is None:
            raise BadParams("CSV input needs --spacing")
        origin = args.origin or [0.0] * len(args.spacing)
        return read_csv_field(path, args.spacing, origin, args.p or 2.0)
    f = read_pwf(path)
    if args.p is not None and args.p != f.grid.p:
        f = ScalarField(Grid(f.grid.shape, f.grid.spacing, f.grid.origin, args.p), f.values)
    return f


def _weight(path: str, args) -> ScalarField:
    return as_weight(_load(path, args), args.clamp_eps)


def _digest(f: ScalarField) -> str:
    return hashlib.sha256(np.ascontiguousarray(f.values, dtype="<f8").tobytes()).hexdigest()


def run_config(args) -> dict:
    skip = {"func", "output", "fields", "timestamp"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def render(report: dict, fmt: str) -> str:
    report = jsonable(report)
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["key", "value"])
    for k, v in _flatten(report):
        out.writerow([k, v])
    return buf.getvalue()


def emit(report: dict, args, passed: bool = True) -> int:
    report = dict(report)
    report["provenance"] = {"tool": TOOL, "version": __version__, "command": args.command,
                            "config": run_config(args)}
    if args.timestamp:
        report["provenance"]["timestamp"] = datetime.now(timezone.utc).isoformat()
    report["passed"] = bool(passed)
    text = render(report, args.format)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK if passed else EXIT_VIOLATION


def _write_field(f: ScalarField, path: Path) -> str:
    if path.suffix == ".csv":
        write_csv_field(f, path)
    else:
        write_pwf(f, path)
    return str(path)


# --- commands ------------------------------------------------------------------

def cmd_gen(args) -> int:
    if not args.output:
        raise BadParams("gen needs --output")
    if len(args.shape) != len(args.spacing) or len(args.shape) < 2:
        raise BadParams("--shape and --spacing need n+1 >= 2 matching entries")
    grid = Grid(tuple(args.shape), tuple(args.spacing),
                tuple(args.origin) if args.origin else None, args.p or 2.0)
    f = generate(args.kind, grid, args.value, args.rate, args.exponent, args.offset,
                 args.low, args.high, args.height, args.sigma, args.seed)
    _write_field(f, Path(args.output))
    summary = {"kind": args.kind, "shape": list(grid.shape), "min": float(f.values.min()),
               "max": float(f.values.max()), "sha256": _digest(f)}
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_audit(args) -> int:
    w = _weight(args.input, args)
    fam = enumerate_family(w.grid, _family(args))
    q = args.q
    const = aq_constant(w, q, fam)
    gr = gurov_reshetnyak(w, fam)
    report = {"input_sha256": _digest(w), "q": q, "family": fam.summary(),
              "aq": const.as_dict(), "gr": gr.as_dict(), "seed": args.seed}
    checks = {}
    if q > 1 and np.isfinite(const.value):
        checks["holder_direction"] = quantitative_measure_check(
            w, const.value ** (1 / q), 1 / q, fam, n_random=args.n_random, seed=args.seed)
    checks["gr_implications"] = gr_implication_check(w, fam)
    a1 = a1_constant(w, fam)
    a1m = a1_via_maximal(w, fam)
    a1_ok = a1m.value <= a1.value * (1 + 1e-12)
    report["a1"] = {"constant": a1.value, "via_maximal": a1m.value, "consistent": a1_ok}
    report["sublevel"] = {str(b): sublevel_condition(w, args.alpha, b, fam).measured
                          for b in args.betas}
    report["checks"] = {k: c.as_dict() for k, c in checks.items()}
    passed = a1_ok and all(c.passed for c in checks.values())
    return emit(report, args, passed)


def cmd_maximal(args) -> int:
    f = _load(args.input, args)
    fam = enumerate_family(f.grid, _family(args))
    res = maximal_backward(f, fam) if args.direction == "backward" else maximal_forward(f, fam)
    out = ScalarField(f.grid, res.filled(args.fill))
    report = {"direction": args.direction, "input_sha256": _digest(f),
              "covered_cells": int(res.covered.sum()), "cells": int(f.grid.size),
              "max": float(np.nanmax(res.values)) if res.covered.any() else None,
              "fill": args.fill, "output_sha256": _digest(out), "family": fam.summary()}
    if args.fields:
        report["field"] = _write_field(out, Path(args.fields) / "maximal.pwf")
    return emit(report, args)


def cmd_rhi(args) -> int:
    w = _weight(args.input, args)
    fam = enumerate_family(w.grid, _family(args))
    rows, passed = [], True
    for eps in args.eps:
        for c in args.c:
            rep = reverse_holder(w, eps, c, fam, alpha=args.alpha, tau=args.tau)
            rows.append({"eps": eps, "c": c, "passed": rep.passed,
                         "min_c": rep.measured["min_c"], "violations": len(rep.violations)})
            passed &= rep.passed
    search = rhi_search(w, args.c, fam, eps_max=args.eps_max, alpha=args.alpha, tau=args.tau)
    report = {"input_sha256": _digest(w), "checks": rows, "search": search,
              "family": fam.summary()}
    return emit(report, args, passed)


def cmd_factorize(args) -> int:
    w = _weight(args.input, args)
    fam = enumerate_family(w.grid, _family(args))
    report = {"input_sha256": _digest(w), "method": args.method, "family": fam.summary()}
    if args.method == "rdf":
        res = rdf_factorize(w, args.q, fam, c=args.c, K=args.iterations)
        report["certificate"] = res.as_dict()
        passed = res.passed
        fields = {"u": res.u, "v": res.v, "eta": res.eta}
    else:
        res = cr_decompose(w, args.eps, fam, c=args.c)
        report["certificate"] = res.as_dict()
        recon = res.b.values * res.maximal_power.values
        err = float(np.max(np.abs(recon / w.values[res.window] - 1)))
        report["certificate"]["reconstruction_error"] = err
        passed = err <= RECON_TOL
        fields = {"b": res.b, "maximal_power": res.maximal_power}
    if args.fields:
        report["fields"] = {k: _write_field(f, Path(args.fields) / f"{k}.pwf")
                            for k, f in sorted(fields.items())}
    return emit(report, args, passed)


def cmd_weaktype(args) -> int:
    w = _weight(args.input, args)
    fam = enumerate_family(w.grid, _family(args))
    q = args.q
    report = {"input_sha256": _digest(w), "q": q, "family": fam.summary()}
    passed = True
    if args.f:
        f = _load(args.f, args)
        weak = weak_type_ratio(f, w, q, fam, n_lambdas=args.lambdas)
        report["weak"] = {"ratio": weak["ratio"], "lambda": weak["lambda"]}
        if q > 1:
            strong = strong_type_ratio(f, w, q, fam)
            report["strong"] = {"ratio": strong["ratio"]}
            # Chebyshev: the strong ratio dominates the weak one
            report["chebyshev"] = strong["ratio"] >= weak["ratio"] * (1 - 1e-12)
            passed = report["chebyshev"]
    if args.extremal is not None:
        ext = extremal_weak_type(w, q, args.extremal, fam)
        report["extremal"] = {k: ext[k] for k in ("ratio", "functional", "lambda", "index")}
        ok = ext["ratio"] >= ext["functional"] * (1 - 1e-9)
        report["extremal"]["passed"] = ok
        passed &= ok
    return emit(report, args, passed)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--input", help="input field (PWF manifest or n=1 CSV)")
    common.add_argument("--output", help="report path (stdout when omitted)")
    common.add_argument("--fields", help="directory for output fields")
    common.add_argument("--p", type=float, default=None, help="scaling exponent")
    common.add_argument("--gamma", type=float, default=0.0, help="time lag")
    common.add_argument("--q", type=float, default=2.0)
    common.add_argument("--scales", type=int, default=None, help="maximum number of scales")
    common.add_argument("--ratio", type=float, default=None, help="scale ratio")
    common.add_argument("--l-min", type=float, default=None, help="smallest half-side")
    common.add_argument("--stride-x", type=float, default=0.5)
    common.add_argument("--stride-t", type=float, default=0.5)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; work is vectorised in one process")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--clamp-eps", type=float, default=None,
                        help="clamp nonpositive weight values up to this level")
    common.add_argument("--spacing", type=float, nargs="+", default=None)
    common.add_argument("--origin", type=float, nargs="+", default=None)
    common.add_argument("--timestamp", action="store_true",
                        help="add a wall-clock timestamp to the report")

    parser = _Parser(prog=TOOL, description="Parabolic Muckenhoupt weight toolkit.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate a field")
    g.add_argument("kind", choices=GEN_KINDS)
    g.add_argument("--shape", type=int, nargs="+", default=[16, 16])
    g.set_defaults(spacing=[1 / 8, 1 / 16])
    for name, default in (("value", 1.0), ("rate", 1.0), ("exponent", 1.0), ("offset", 1.0),
                          ("low", 1.0), ("high", 2.0), ("height", 100.0), ("sigma", 0.5)):
        g.add_argument(f"--{name}", type=float, default=default)
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("audit", parents=[common], help="A_q constant and A_infinity audit")
    a.add_argument("--alpha", type=float, default=0.5)
    a.add_argument("--betas", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    a.add_argument("--n-random", type=int, default=8)
    a.set_defaults(func=cmd_audit)

    m = sub.add_parser("maximal", parents=[common], help="forward/backward maximal function")
    m.add_argument("--direction", choices=("backward", "forward"), default="backward")
    m.add_argument("--fill", type=float, default=0.0, help="value written on uncovered cells")
    m.set_defaults(func=cmd_maximal)

    r = sub.add_parser("rhi", parents=[common], help="reverse Hölder checks and search")
    r.add_argument("--eps", type=float, nargs="+", default=[0.1, 0.5, 1.0])
    r.add_argument("--c", type=float, nargs="+", default=[1.0, 1.5, 2.0])
    r.add_argument("--eps-max", type=float, default=4.0)
    r.add_argument("--alpha", type=float, default=0.0)
    r.add_argument("--tau", type=float, default=1.0)
    r.set_defaults(func=cmd_rhi)

    fz = sub.add_parser("factorize", parents=[common], help="factor or decompose a weight")
    fz.add_argument("--method", choices=("rdf", "cr"), default="rdf")
    fz.add_argument("--c", type=float, default=None)
    fz.add_argument("--eps", type=float, default=None)
    fz.add_argument("--iterations", type=int, default=32)
    fz.set_defaults(func=cmd_factorize)

    wt = sub.add_parser("weaktype", parents=[common], help="weak/strong type ratios")
    wt.add_argument("--f", help="test function field")
    wt.add_argument("--lambdas", type=int, default=64)
    wt.add_argument("--extremal", type=int, default=None,
                    help="family index for the extremal test function")
    wt.set_defaults(func=cmd_weaktype)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command != "gen" and not args.input:
            raise BadParams("--input is required")
        return args.func(args)
    except (ParabolicError, OSError) as exc:
        sys.stderr.write(f"{TOOL}: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
