"""CSV and JSON readers/writers for point clouds, subsets and tables.

Floats are written with ``repr`` so files round-trip exactly and are
byte-stable across runs.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .space import AtomSubset, MetricMeasureSpace, PointSet, SegmentSet

__all__ = [
    "fmt",
    "write_table",
    "write_points_csv",
    "read_points_csv",
    "read_space_csv",
    "write_index_csv",
    "read_index_csv",
    "write_segments_csv",
    "read_segments_csv",
    "read_subset",
    "write_json",
]


def fmt(v) -> str:
    """Canonical text for a table cell."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_points_csv(path, points, masses) -> Path:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    header = [f"x{i + 1}" for i in range(pts.shape[1])] + ["mass"]
    return write_table(path, header, ([*p, m] for p, m in zip(pts, masses)))


def _read_rows(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if data.size == 0:
        data = np.zeros((0, len(header)))
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    return header, data


def read_points_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``x1..xD,mass`` (``x,y,mass`` also accepted).

    Raises
    ------
    ValueError
        On NaN coordinates, or non-positive or non-finite masses.
    """
    header, data = _read_rows(path)
    if header[-1] != "mass" or len(header) < 2:
        raise ValueError(f"{path}: expected coordinate columns followed by 'mass'")
    pts, masses = data[:, :-1], data[:, -1]
    if np.isnan(pts).any():
        raise ValueError(f"{path}: NaN coordinate")
    if not (np.isfinite(masses).all() and (masses > 0).all()):
        raise ValueError(f"{path}: masses must be positive and finite")
    return pts, masses


def read_space_csv(path, cell: float | None = None) -> MetricMeasureSpace:
    pts, masses = read_points_csv(path)
    return MetricMeasureSpace(pts, masses, cell=cell)


def write_index_csv(path, indices) -> Path:
    return write_table(path, ["index"], ([int(i)] for i in indices))


def read_index_csv(path) -> AtomSubset:
    header, data = _read_rows(path)
    if header != ["index"]:
        raise ValueError(f"{path}: expected a single 'index' column")
    if np.any(data != np.round(data)):
        raise ValueError(f"{path}: indices must be integers")
    return AtomSubset(data[:, 0].astype(int))


def write_segments_csv(path, segments: SegmentSet) -> Path:
    seg = segments.segments
    D = seg.shape[2]
    header = [f"a{i + 1}" for i in range(D)] + [f"b{i + 1}" for i in range(D)]
    return write_table(path, header, ([*s[0], *s[1]] for s in seg))


def read_segments_csv(path) -> SegmentSet:
    header, data = _read_rows(path)
    if len(header) % 2 or not header[0].startswith("a"):
        raise ValueError(f"{path}: expected a1..aD,b1..bD columns")
    D = len(header) // 2
    return SegmentSet(np.stack([data[:, :D], data[:, D:]], axis=1))


def read_subset(path):
    """Index, segment or point CSV, chosen by its header."""
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), [])
    if header == ["index"]:
        return read_index_csv(path)
    if header and header[0].startswith("a"):
        return read_segments_csv(path)
    if header and header[-1] == "mass":
        return PointSet(read_points_csv(path)[0])
    _, data = _read_rows(path)
    return PointSet(data)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else fmt(v)
    return obj


def write_json(path, obj) -> Path:
    """Sorted-key JSON; non-finite floats become strings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n")
    return path
