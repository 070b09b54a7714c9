"""Portable field format (PWF v1) and CSV import.

A PWF field is two files:

* a UTF-8 JSON manifest ``{"version": 1, "n", "p", "shape", "spacing",
  "origin", "data_file"}``; ``data_file`` is resolved relative to the
  manifest's directory;
* a raw data file of ``prod(shape)`` IEEE-754 binary64 values,
  little-endian, row-major (C order) with axes ``(x_1, ..., x_n, t)``, so
  the time index varies fastest.

No header, padding or trailer is written to the data file; its size is
exactly ``8 * prod(shape)`` bytes.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import BadParams
from .field import Grid, ScalarField

PWF_VERSION = 1
_DTYPE = np.dtype("<f8")


def manifest_dict(grid: Grid, data_file: str) -> dict:
    return {"version": PWF_VERSION, "n": grid.n, "p": grid.p,
            "shape": list(grid.shape), "spacing": list(grid.spacing),
            "origin": list(grid.origin), "data_file": data_file}


def write_pwf(field: ScalarField, path) -> Path:
    """Write manifest ``path`` plus ``<stem>.f64`` beside it; returns manifest path."""
    path = Path(path)
    data_name = path.with_suffix(".f64").name
    path.parent.mkdir(parents=True, exist_ok=True)
    (path.parent / data_name).write_bytes(
        np.ascontiguousarray(field.values, dtype=_DTYPE).tobytes(order="C"))
    path.write_text(json.dumps(manifest_dict(field.grid, data_name), indent=2,
                               sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_pwf(path) -> ScalarField:
    path = Path(path)
    try:
        meta = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BadParams(f"{path}: manifest is not valid JSON ({exc})") from exc
    if not isinstance(meta, dict):
        raise BadParams(f"{path}: manifest must be a JSON object")
    missing = {"version", "n", "p", "shape", "spacing", "origin", "data_file"} - set(meta)
    if missing:
        raise BadParams(f"{path}: manifest lacks keys {sorted(missing)}")
    if meta["version"] != PWF_VERSION:
        raise BadParams(f"{path}: unsupported PWF version {meta['version']!r}")
    grid = Grid(tuple(meta["shape"]), tuple(meta["spacing"]),
                tuple(meta["origin"]), float(meta["p"]))
    if grid.n != meta["n"]:
        raise BadParams(f"{path}: n={meta['n']} disagrees with shape {grid.shape}")
    raw = (path.parent / meta["data_file"]).read_bytes()
    if len(raw) != _DTYPE.itemsize * grid.size:
        raise BadParams(f"{path}: data file has {len(raw)} bytes, "
                        f"expected {_DTYPE.itemsize * grid.size}")
    values = np.frombuffer(raw, dtype=_DTYPE).reshape(grid.shape)
    return ScalarField(grid, values)


def read_csv_field(path, spacing, origin=(0.0, 0.0), p: float = 2.0,
                   shape=None) -> ScalarField:
    """Import an ``n = 1`` field from CSV columns ``x_index, t_index, value``.

    Every cell must appear exactly once; ``shape`` defaults to
    ``(max x_index + 1, max t_index + 1)``.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        needed = {"x_index", "t_index", "value"}
        if reader.fieldnames is None or not needed <= set(reader.fieldnames):
            raise BadParams(f"{path}: CSV needs columns {sorted(needed)}")
        for row in reader:
            rows.append((int(row["x_index"]), int(row["t_index"]), float(row["value"])))
    if not rows:
        raise BadParams(f"{path}: CSV has no data rows")
    ix = np.array([r[0] for r in rows])
    it = np.array([r[1] for r in rows])
    if shape is None:
        shape = (int(ix.max()) + 1, int(it.max()) + 1)
    grid = Grid(tuple(shape), tuple(spacing), tuple(origin), p)
    values = np.full(grid.shape, np.nan)
    seen = np.zeros(grid.shape, dtype=int)
    for i, j, v in rows:
        if not (0 <= i < shape[0] and 0 <= j < shape[1]):
            raise BadParams(f"{path}: index ({i}, {j}) outside shape {shape}")
        values[i, j] = v
        seen[i, j] += 1
    if np.any(seen != 1):
        raise BadParams(f"{path}: every cell must appear exactly once")
    return ScalarField(grid, values)


def write_csv_field(field: ScalarField, path) -> None:
    if field.grid.n != 1:
        raise BadParams("CSV export is defined for n = 1 only")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["x_index", "t_index", "value"])
        for (i, j), v in np.ndenumerate(field.values):
            out.writerow([i, j, repr(float(v))])
