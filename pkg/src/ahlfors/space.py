"""Discretized quasi-metric measure spaces.

A :class:`MetricMeasureSpace` is a finite set of atoms carrying positive
masses together with a quasi-metric.  Euclidean spaces are backed by a
k-d tree for range queries; table metrics fall back to linear scans.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "QuasiMetric",
    "MetricMeasureSpace",
    "AtomSubset",
    "PointSet",
    "SegmentSet",
    "Ball",
    "ball_query",
    "distance_to_set",
    "greedy_net",
    "metric_dimension_probe",
    "point_segment_distance",
    "set_distance",
    "log_radii",
]

# Guard band for k-d tree candidate retrieval; exact filtering happens afterwards.
_INDEX_PAD = 1e-9


@dataclass(frozen=True)
class QuasiMetric:
    """Euclidean metric in ``dim`` dimensions or an explicit distance table.

    ``K`` is the declared triangle constant; it is validated, never fitted.
    """

    kind: str = "euclidean"
    dim: int | None = None
    K: float = 1.0
    table: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("euclidean", "table"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.K < 1:
            raise ValueError("triangle constant K must be >= 1")
        if self.kind == "euclidean" and self.K != 1.0:
            raise ValueError("Euclidean metric has K = 1")
        if self.kind == "table":
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 2 or t.shape[0] != t.shape[1]:
                raise ValueError("distance table must be square")
            if not np.array_equal(t, t.T):
                raise ValueError("distance table is not symmetric")
            off = ~np.eye(len(t), dtype=bool)
            if np.any(np.diag(t) != 0) or np.any(t[off] <= 0):
                raise ValueError("distance table must be zero exactly on the diagonal")
            object.__setattr__(self, "table", t)

    @classmethod
    def euclidean(cls, dim: int) -> "QuasiMetric":
        return cls("euclidean", dim=dim)

    @classmethod
    def from_table(cls, table, K: float = 1.0) -> "QuasiMetric":
        return cls("table", K=K, table=np.asarray(table, dtype=float))

    def pairwise(self, a, b) -> np.ndarray:
        """Distances between two locator arrays.

        Locators are coordinate rows for Euclidean metrics and atom indices
        for table metrics.
        """
        if self.kind == "table":
            return self.table[np.ix_(np.asarray(a, dtype=int), np.asarray(b, dtype=int))]
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        diff = a[:, None, :] - b[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    def check_axioms(self, locators, n_triples: int = 10_000, seed: int = 0) -> dict:
        """Validate symmetry, identity of indiscernibles and the K-triangle inequality.

        Table metrics get an exhaustive symmetry/zero scan; triangles are
        sampled.  Returns the worst observed ratio ``d(x,y) / (d(x,z)+d(z,y))``.
        """
        n = len(locators)
        report = {"symmetric": True, "definite": True, "worst_triangle_ratio": 0.0, "triangle_ok": True}
        if self.kind == "table":
            t = self.table
            report["symmetric"] = bool(np.array_equal(t, t.T))
            off = ~np.eye(len(t), dtype=bool)
            report["definite"] = bool(np.all(np.diag(t) == 0) and np.all(t[off] > 0))
        if n < 3:
            return report
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, n, size=(n_triples, 3))
        loc = np.asarray(locators)
        x, y, z = (loc[idx[:, k]] for k in range(3))
        dxy = self._paired(x, y)
        dsum = self._paired(x, z) + self._paired(z, y)
        ok = dsum > 0
        if np.any(ok):
            report["worst_triangle_ratio"] = float(np.max(dxy[ok] / dsum[ok]))
        report["triangle_ok"] = report["worst_triangle_ratio"] <= self.K * (1 + 1e-12)
        return report

    def _paired(self, a, b) -> np.ndarray:
        if self.kind == "table":
            return self.table[np.asarray(a, dtype=int), np.asarray(b, dtype=int)]
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        return np.sqrt(np.einsum("ij,ij->i", d, d))


class MetricMeasureSpace:
    """Finite atomic discretization of a metric measure space.

    Parameters
    ----------
    points : array_like, shape (n, D) or None
        Atom coordinates.  ``None`` for table metrics.
    masses : array_like, shape (n,)
        Strictly positive atom masses.
    metric : QuasiMetric, optional
        Defaults to the Euclidean metric in ``D`` dimensions.
    cell : float, optional
        Resolution scale of the discretization.  Estimators only trust radii
        of at least ``2 * cell``.  Defaults to the largest nearest-neighbour
        distance.

    Notes
    -----
    Instances are treated as immutable after construction, so queries are
    safe to run from several threads.
    """

    def __init__(self, points, masses, metric: QuasiMetric | None = None, cell: float | None = None):
        masses = np.asarray(masses, dtype=float).ravel()
        if masses.size == 0:
            raise ValueError("space needs at least one atom")
        if not np.all(np.isfinite(masses)) or np.any(masses <= 0):
            raise ValueError("atom masses must be finite and strictly positive")
        if metric is None or metric.kind == "euclidean":
            pts = np.asarray(points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            if pts.shape[0] != masses.size:
                raise ValueError("points and masses differ in length")
            if not np.all(np.isfinite(pts)):
                raise ValueError("coordinates must be finite")
            if metric is None:
                metric = QuasiMetric.euclidean(pts.shape[1])
            self.points = pts
            self._tree = cKDTree(pts)
        else:
            if metric.table.shape[0] != masses.size:
                raise ValueError("distance table and masses differ in size")
            self.points = None
            self._tree = None
        self.masses = masses
        self.metric = metric
        self.total_mass = float(np.sum(masses))
        self._diameter: float | None = None
        self._cell = cell
        self.masses.setflags(write=False)
        if self.points is not None:
            self.points.setflags(write=False)

    def __len__(self) -> int:
        return self.masses.size

    def __repr__(self) -> str:
        return f"MetricMeasureSpace(n={len(self)}, metric={self.metric.kind}, total_mass={self.total_mass:.6g})"

    @property
    def is_euclidean(self) -> bool:
        return self.metric.kind == "euclidean"

    def locators(self, indices=None):
        """Metric locators for the given atoms (all atoms by default)."""
        if indices is None:
            indices = np.arange(len(self))
        indices = np.asarray(indices, dtype=int)
        return self.points[indices] if self.is_euclidean else indices

    def as_locators(self, where):
        """Normalize evaluation points: integer arrays are atom indices,
        float arrays are coordinates (Euclidean only)."""
        arr = np.asarray(where)
        if arr.dtype.kind in "iu":
            idx = np.atleast_1d(arr)
            if np.any(idx < 0) or np.any(idx >= len(self)):
                raise IndexError("atom index out of range")
            return self.locators(idx)
        if not self.is_euclidean:
            raise TypeError("table metrics only accept atom indices")
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :] if arr.size == self.points.shape[1] else arr[:, None]
        return arr

    def distances_from(self, where, indices=None) -> np.ndarray:
        """Distance matrix between evaluation points and atoms."""
        return self.metric.pairwise(self.as_locators(where), self.locators(indices))

    @property
    def diameter(self) -> float:
        if self._diameter is None:
            self._diameter = self._compute_diameter()
        return self._diameter

    def _compute_diameter(self) -> float:
        n = len(self)
        if n == 1:
            return 0.0
        if not self.is_euclidean:
            return float(self.metric.table.max())
        pts = self.points
        if pts.shape[1] <= 3 and n > 3:
            from scipy.spatial import ConvexHull, QhullError

            try:
                pts = pts[ConvexHull(pts).vertices]
            except (QhullError, ValueError):
                pass
        best = 0.0
        for start in range(0, len(pts), 512):
            best = max(best, float(self.metric.pairwise(pts[start:start + 512], pts).max()))
        return best

    @property
    def cell(self) -> float:
        if self._cell is None:
            if len(self) == 1:
                self._cell = 0.0
            elif self.is_euclidean:
                d, _ = self._tree.query(self.points, k=2)
                self._cell = float(d[:, 1].max())
            else:
                t = self.metric.table + np.diag(np.full(len(self), np.inf))
                self._cell = float(t.min(axis=1).max())
        return self._cell

    def valid_window(self) -> tuple[float, float]:
        """Radii where the discretization is expected to look regular."""
        return 2.0 * self.cell, self.diameter

    def ball_indices(self, center, radius: float, closed: bool = False, use_index: bool = True) -> np.ndarray:
        """Atoms with ``d(center, y) < radius`` (``<=`` when closed), ascending."""
        loc = self.as_locators(center)
        if len(loc) != 1:
            raise ValueError("ball center must be a single point")
        if use_index and self._tree is not None:
            cand = self._tree.query_ball_point(loc[0], radius * (1 + _INDEX_PAD) + _INDEX_PAD)
            cand = np.asarray(sorted(cand), dtype=int)
            if cand.size == 0:
                return cand
        else:
            cand = np.arange(len(self))
        d = self.metric.pairwise(loc, self.locators(cand))[0]
        keep = d <= radius if closed else d < radius
        return cand[keep]

    def ball_mass(self, center, radius: float, closed: bool = False) -> float:
        return float(self.masses[self.ball_indices(center, radius, closed)].sum())

    def restrict(self, indices) -> "MetricMeasureSpace":
        """Sub-space on the given atoms, same metric and masses."""
        idx = np.asarray(indices, dtype=int)
        if self.is_euclidean:
            return MetricMeasureSpace(self.points[idx], self.masses[idx], self.metric, cell=self._cell)
        sub = QuasiMetric.from_table(self.metric.table[np.ix_(idx, idx)], K=self.metric.K)
        return MetricMeasureSpace(None, self.masses[idx], sub, cell=self._cell)


@dataclass(frozen=True)
class AtomSubset:
    """A subset of a space given by sorted, duplicate-free atom indices."""

    indices: np.ndarray

    def __init__(self, indices):
        idx = np.asarray(indices, dtype=int).ravel()
        if np.unique(idx).size != idx.size:
            raise ValueError("duplicate atom indices")
        object.__setattr__(self, "indices", np.sort(idx))

    def __len__(self):
        return self.indices.size


@dataclass(frozen=True)
class PointSet:
    """A finite set of coordinates that need not be atoms of the space."""

    points: np.ndarray

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class SegmentSet:
    """Union of closed segments, shape (k, 2, D); exact distances."""

    segments: np.ndarray

    def __init__(self, segments):
        seg = np.asarray(segments, dtype=float)
        if seg.ndim != 3 or seg.shape[1] != 2:
            raise ValueError("segments must have shape (k, 2, D)")
        object.__setattr__(self, "segments", seg)

    def __len__(self):
        return len(self.segments)

    @classmethod
    def polygon(cls, vertices) -> "SegmentSet":
        v = np.asarray(vertices, dtype=float)
        return cls(np.stack([v, np.roll(v, -1, axis=0)], axis=1))

    def transformed(self, fn) -> "SegmentSet":
        k, _, dim = self.segments.shape
        return SegmentSet(fn(self.segments.reshape(-1, dim)).reshape(k, 2, -1))


@dataclass(frozen=True)
class Ball:
    center: object
    radius: float
    closed: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")


def ball_query(space: MetricMeasureSpace, ball: Ball, use_index: bool = True) -> np.ndarray:
    """Indices of atoms in ``ball``, ascending.

    Open balls keep ``d < r`` and closed balls ``d <= r``, compared exactly.
    """
    return space.ball_indices(ball.center, ball.radius, ball.closed, use_index=use_index)


def point_segment_distance(x, segments) -> np.ndarray:
    """Distance from each row of ``x`` to the union of ``segments``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    seg = np.asarray(segments, dtype=float)
    a, b = seg[:, 0, :], seg[:, 1, :]
    ab = b - a
    denom = np.einsum("kd,kd->k", ab, ab)
    denom = np.where(denom > 0, denom, 1.0)
    best = np.full(len(x), np.inf)
    for start in range(0, len(x), 4096):
        xs = x[start:start + 4096]
        ap = xs[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("nkd,kd->nk", ap, ab) / denom, 0.0, 1.0)
        proj = a[None] + t[..., None] * ab[None]
        diff = xs[:, None, :] - proj
        best[start:start + 4096] = np.sqrt(np.einsum("nkd,nkd->nk", diff, diff)).min(axis=1)
    return best


def _lift(points, dim):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] < dim:
        points = np.hstack([points, np.zeros((len(points), dim - points.shape[1]))])
    return points


def distance_to_set(space: MetricMeasureSpace, x, F) -> np.ndarray | float:
    """``d(x, F) = inf{d(x, y) : y in F}`` for one or many points ``x``.

    ``F`` may be an :class:`AtomSubset`, a :class:`PointSet` or a
    :class:`SegmentSet`; the latter uses exact point-segment geometry.
    Scalar input (a single atom index or one coordinate row) gives a float.
    """
    if len(F) == 0:
        raise ValueError("distance to an empty set is undefined")
    scalar = np.ndim(x) == 0 or (np.asarray(x).dtype.kind == "f" and np.ndim(x) == 1 and space.is_euclidean
                                 and np.size(x) == space.points.shape[1])
    loc = space.as_locators(x)
    if isinstance(F, AtomSubset):
        out = np.full(len(loc), np.inf)
        for start in range(0, F.indices.size, 2048):
            blk = space.metric.pairwise(loc, space.locators(F.indices[start:start + 2048]))
            out = np.minimum(out, blk.min(axis=1))
    elif isinstance(F, PointSet):
        if not space.is_euclidean:
            raise TypeError("coordinate sets need a Euclidean space")
        dim = max(loc.shape[1], F.points.shape[1])
        from scipy.spatial import cKDTree as _T

        out, _ = _T(_lift(F.points, dim)).query(_lift(loc, dim))
    elif isinstance(F, SegmentSet):
        if not space.is_euclidean:
            raise TypeError("segment sets need a Euclidean space")
        dim = max(loc.shape[1], F.segments.shape[2])
        seg = F.segments if F.segments.shape[2] == dim else np.stack(
            [_lift(F.segments[:, 0], dim), _lift(F.segments[:, 1], dim)], axis=1)
        out = point_segment_distance(_lift(loc, dim), seg)
    else:
        raise TypeError(f"unsupported subset type {type(F).__name__}")
    out = np.asarray(out, dtype=float)
    return float(out[0]) if scalar else out


def _segment_segment_distance(p0, p1, q0, q1) -> float:
    # Minimum over endpoint-to-segment distances; exact unless the segments cross.
    cands = [
        point_segment_distance(p0, [[q0, q1]])[0],
        point_segment_distance(p1, [[q0, q1]])[0],
        point_segment_distance(q0, [[p0, p1]])[0],
        point_segment_distance(q1, [[p0, p1]])[0],
    ]
    if len(p0) == 2:
        def orient(a, b, c):
            return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

        if (orient(p0, p1, q0) * orient(p0, p1, q1) < 0) and (orient(q0, q1, p0) * orient(q0, q1, p1) < 0):
            return 0.0
    return float(min(cands))


def set_distance(A, B) -> float:
    """Minimal distance between two Euclidean sets (points or segments)."""
    if isinstance(A, SegmentSet) and isinstance(B, SegmentSet):
        dim = max(A.segments.shape[2], B.segments.shape[2])
        sa = np.stack([_lift(A.segments[:, 0], dim), _lift(A.segments[:, 1], dim)], axis=1)
        sb = np.stack([_lift(B.segments[:, 0], dim), _lift(B.segments[:, 1], dim)], axis=1)
        return min(_segment_segment_distance(p[0], p[1], q[0], q[1]) for p in sa for q in sb)
    if isinstance(A, SegmentSet):
        A, B = B, A
    pa = A.points if isinstance(A, PointSet) else np.asarray(A, dtype=float)
    if isinstance(B, SegmentSet):
        dim = max(pa.shape[1], B.segments.shape[2])
        seg = np.stack([_lift(B.segments[:, 0], dim), _lift(B.segments[:, 1], dim)], axis=1)
        return float(point_segment_distance(_lift(pa, dim), seg).min())
    pb = B.points if isinstance(B, PointSet) else np.asarray(B, dtype=float)
    dim = max(pa.shape[1], pb.shape[1])
    d, _ = cKDTree(_lift(pb, dim)).query(_lift(pa, dim))
    return float(np.min(d))


def greedy_net(space: MetricMeasureSpace, r: float, indices=None) -> np.ndarray:
    """Maximal ``r``-disperse subset built by scanning atoms in index order.

    The result is pairwise ``>= r`` apart and every scanned atom lies at
    distance ``< r`` from some net point.
    """
    if not r > 0:
        raise ValueError("net radius must be positive")
    scan = np.arange(len(space)) if indices is None else np.sort(np.asarray(indices, dtype=int))
    covered = np.zeros(len(space), dtype=bool)
    net = []
    for i in scan:
        if covered[i]:
            continue
        net.append(i)
        covered[space.ball_indices(np.array([i]), r)] = True
    return np.asarray(net, dtype=int)


def metric_dimension_probe(space: MetricMeasureSpace, radii: Sequence[float]) -> int:
    """Largest number of points of a greedy ``r``-net inside any atom-centred
    ball of radius ``2r``, maximized over ``radii``."""
    radii = list(radii)
    if not radii or any(r <= 0 for r in radii):
        raise ValueError("radii must be a nonempty list of positive numbers")
    best = 0
    for r in radii:
        net = greedy_net(space, r)
        if space.is_euclidean:
            tree = cKDTree(space.points[net])
            for i in range(len(space)):
                cand = tree.query_ball_point(space.points[i], 2 * r * (1 + _INDEX_PAD))
                if len(cand) <= best:
                    continue
                d = space.metric.pairwise(space.points[i:i + 1], space.points[net[cand]])[0]
                best = max(best, int(np.count_nonzero(d < 2 * r)))
        else:
            d = space.metric.table[:, net]
            best = max(best, int((d < 2 * r).sum(axis=1).max()))
    return best


def log_radii(rmin: float, rmax: float, per_decade: int = 12, include_max: bool = True) -> np.ndarray:
    """Log-spaced radii between ``rmin`` and ``rmax`` (default 12 per decade)."""
    if not (0 < rmin < rmax):
        raise ValueError("need 0 < rmin < rmax")
    n = max(2, int(np.ceil(per_decade * np.log10(rmax / rmin))) + 1)
    r = np.geomspace(rmin, rmax, n)
    return r if include_max else r[:-1]
