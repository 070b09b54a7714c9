import json
import struct

import numpy as np
import pytest

from parabolic_ap.errors import BadParams
from parabolic_ap.field import Grid, ScalarField
from parabolic_ap.pwf import read_csv_field, read_pwf, write_csv_field, write_pwf


def sample():
    g = Grid((2, 3), (0.5, 0.25), (1.0, -1.0), 3.0)
    return ScalarField(g, np.arange(6, dtype=float).reshape(2, 3) + 0.5)


def test_roundtrip(tmp_path):
    f = sample()
    path = write_pwf(f, tmp_path / "w.pwf")
    back = read_pwf(path)
    assert back.grid == f.grid
    assert np.array_equal(back.values, f.values)


def test_byte_layout(tmp_path):
    f = sample()
    path = write_pwf(f, tmp_path / "w.pwf")
    meta = json.loads(path.read_text())
    assert meta == {"version": 1, "n": 1, "p": 3.0, "shape": [2, 3],
                    "spacing": [0.5, 0.25], "origin": [1.0, -1.0], "data_file": "w.f64"}
    raw = (tmp_path / "w.f64").read_bytes()
    assert len(raw) == 48
    # little-endian doubles, time index fastest
    assert struct.unpack("<6d", raw) == (0.5, 1.5, 2.5, 3.5, 4.5, 5.5)


@pytest.mark.parametrize("mutate", [
    lambda m: m.pop("shape"),
    lambda m: m.update(version=2),
    lambda m: m.update(n=2),
    lambda m: m.update(shape=[2, 4]),
])
def test_bad_manifests(tmp_path, mutate):
    path = write_pwf(sample(), tmp_path / "w.pwf")
    meta = json.loads(path.read_text())
    mutate(meta)
    path.write_text(json.dumps(meta))
    with pytest.raises(BadParams):
        read_pwf(path)


def test_corrupt_json(tmp_path):
    p = tmp_path / "x.pwf"
    p.write_text("{not json")
    with pytest.raises(BadParams):
        read_pwf(p)


def test_csv_roundtrip(tmp_path):
    f = sample()
    write_csv_field(f, tmp_path / "w.csv")
    back = read_csv_field(tmp_path / "w.csv", (0.5, 0.25), (1.0, -1.0), 3.0)
    assert back.grid == f.grid and np.array_equal(back.values, f.values)


def test_csv_missing_cell(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("x_index,t_index,value\n0,0,1\n0,1,1\n1,1,1\n")
    with pytest.raises(BadParams):
        read_csv_field(p, (1.0, 1.0))
