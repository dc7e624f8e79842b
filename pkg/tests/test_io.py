import json

import numpy as np
import pytest

from ahlfors import io
from ahlfors.space import AtomSubset, PointSet, SegmentSet


def test_points_roundtrip(tmp_path, gasket6):
    p = io.write_points_csv(tmp_path / "g.csv", gasket6.points, gasket6.masses)
    pts, m = io.read_points_csv(p)
    assert np.array_equal(pts, gasket6.points) and np.array_equal(m, gasket6.masses)
    assert p.read_text().splitlines()[0] == "x1,x2,mass"


def test_points_reject_bad_mass(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("x,y,mass\n0,0,1\n1,0,0\n")
    with pytest.raises(ValueError):
        io.read_points_csv(f)
    f.write_text("x,y,mass\n0,nan,1\n")
    with pytest.raises(ValueError):
        io.read_points_csv(f)
    f.write_text("x,y,weight\n0,0,1\n")
    with pytest.raises(ValueError):
        io.read_points_csv(f)


def test_index_and_segments(tmp_path):
    io.write_index_csv(tmp_path / "i.csv", [3, 1, 2])
    sub = io.read_subset(tmp_path / "i.csv")
    assert isinstance(sub, AtomSubset) and sub.indices.tolist() == [1, 2, 3]
    seg = SegmentSet([[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.5, 0.8]]])
    io.write_segments_csv(tmp_path / "s.csv", seg)
    back = io.read_subset(tmp_path / "s.csv")
    assert isinstance(back, SegmentSet) and np.array_equal(back.segments, seg.segments)
    io.write_points_csv(tmp_path / "p.csv", [[0.5, 0.5]], [1.0])
    assert isinstance(io.read_subset(tmp_path / "p.csv"), PointSet)


def test_fmt_and_json(tmp_path):
    assert io.fmt(0.1) == "0.1" and io.fmt(True) == "true" and io.fmt(float("inf")) == "inf"
    p = io.write_json(tmp_path / "a.json", {"b": np.float64(1.5), "a": [np.int64(2), float("nan")]})
    assert json.loads(p.read_text()) == {"a": [2, "nan"], "b": 1.5}


def test_header_only_table(tmp_path):
    p = io.write_table(tmp_path / "t.csv", ["a", "b"], [])
    assert p.read_text() == "a,b\n"
