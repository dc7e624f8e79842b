"""Generators for the example spaces: the Sierpinski gasket, the boundary of
its triangle, middle-thirds Cantor sets, uniform grids, finite point sets and
disjoint unions of placed copies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .maximal import DiscreteMeasure
from .space import MetricMeasureSpace, PointSet, SegmentSet, set_distance

__all__ = [
    "Placement",
    "SierpinskiGasket",
    "TriangleBoundary",
    "CantorMiddleThirds",
    "UnitSquareGrid",
    "UnitIntervalGrid",
    "FinitePointSet",
    "DisjointUnion",
    "GeneratedSet",
    "generate",
    "gasket_boundary_pair",
    "spec_from_dict",
    "GASKET_DIM",
    "CANTOR_DIM",
    "TRIANGLE",
]

GASKET_DIM = math.log(3) / math.log(2)
CANTOR_DIM = math.log(2) / math.log(3)
TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])


@dataclass(frozen=True)
class Placement:
    """Similarity ``x -> scale * R(rotation) x + translation``.

    One-dimensional sets are lifted onto the x-axis whenever the placement
    is planar (nonzero rotation or a 2-D translation).
    """

    scale: float = 1.0
    rotation: float = 0.0
    translation: tuple = ()

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("placement scale must be positive")

    @property
    def planar(self) -> bool:
        return self.rotation != 0.0 or len(self.translation) >= 2

    def apply(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.planar and pts.shape[1] == 1:
            pts = np.hstack([pts, np.zeros((len(pts), 1))])
        out = self.scale * pts
        if self.rotation:
            c, s = math.cos(self.rotation), math.sin(self.rotation)
            out = out @ np.array([[c, s], [-s, c]])
        if self.translation:
            t = np.asarray(self.translation, dtype=float)
            if t.size < out.shape[1]:
                t = np.concatenate([t, np.zeros(out.shape[1] - t.size)])
            out = out + t[: out.shape[1]]
        return out

    @property
    def is_identity(self) -> bool:
        return self.scale == 1.0 and not self.rotation and not self.translation


@dataclass
class GeneratedSet:
    """Atoms of a generated set with their measure and metadata.

    ``local_radius`` is one cell diameter: below it the discretization is
    atomic rather than Ahlfors regular.  ``outline`` is an exact descriptor
    of (a superset boundary of) the continuum set, used for gaps between
    union members; ``geometry`` is an exact descriptor of the set itself
    when one exists, used for distances to it.
    """

    name: str
    points: np.ndarray
    masses: np.ndarray
    exponent: float
    local_radius: float
    geometry: SegmentSet | None = None
    outline: object = None
    members: list = field(default_factory=list)
    labels: np.ndarray | None = None
    gap: float = math.inf

    def __post_init__(self):
        if not self.masses.sum() > 0:
            raise ValueError("generated set has no mass")
        if self.exponent < 0 or self.exponent > self.points.shape[1] + 1e-12:
            raise ValueError("advertised exponent outside [0, ambient dimension]")

    def __len__(self):
        return len(self.masses)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def space(self) -> MetricMeasureSpace:
        return MetricMeasureSpace(self.points, self.masses, cell=self.local_radius)

    def measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.masses, points=self.points)

    def subset(self):
        """Exact descriptor when known, otherwise the atoms as a point set."""
        return self.geometry if self.geometry is not None else PointSet(self.points)

    def metadata(self) -> dict:
        return {
            "name": self.name,
            "atoms": len(self),
            "exponent": self.exponent,
            "r0": self.local_radius,
            "cell": self.local_radius,
            "gap": None if math.isinf(self.gap) else self.gap,
            "total_mass": self.total_mass,
        }


@dataclass(frozen=True)
class SierpinskiGasket:
    level: int
    placement: Placement = Placement()

    def _build(self) -> GeneratedSet:
        tris = TRIANGLE[None]
        for _ in range(self.level):
            a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
            ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
            tris = np.concatenate([np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1), np.stack([ca, bc, c], 1)])
        n = len(tris)
        return GeneratedSet(
            f"gasket-{self.level}", tris.mean(axis=1), np.full(n, 1.0 / n), GASKET_DIM,
            2.0 ** -self.level, outline=SegmentSet.polygon(TRIANGLE))


@dataclass(frozen=True)
class TriangleBoundary:
    segments: int
    placement: Placement = Placement()

    def _build(self) -> GeneratedSet:
        m = self.segments
        t = (np.arange(m) + 0.5) / m
        pts = np.concatenate([TRIANGLE[i] + t[:, None] * (TRIANGLE[(i + 1) % 3] - TRIANGLE[i]) for i in range(3)])
        geom = SegmentSet.polygon(TRIANGLE)
        return GeneratedSet(f"triangle-boundary-{m}", pts, np.full(3 * m, 1.0 / m), 1.0, 1.0 / m,
                            geometry=geom, outline=geom)


@dataclass(frozen=True)
class CantorMiddleThirds:
    level: int
    placement: Placement = Placement()

    def _build(self) -> GeneratedSet:
        left = np.zeros(1)
        for k in range(self.level):
            w = 3.0 ** -k
            left = np.concatenate([left, left + 2 * w / 3])
        left.sort()
        w = 3.0 ** -self.level
        ends = np.unique(np.concatenate([left, left + w]))
        return GeneratedSet(f"cantor-{self.level}", (left + w / 2)[:, None], np.full(left.size, 2.0 ** -self.level),
                            CANTOR_DIM, w, outline=PointSet(ends[:, None]))


@dataclass(frozen=True)
class UnitSquareGrid:
    n: int
    placement: Placement = Placement()

    def _build(self) -> GeneratedSet:
        c = (np.arange(self.n) + 0.5) / self.n
        xx, yy = np.meshgrid(c, c, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        square = SegmentSet.polygon([[0, 0], [1, 0], [1, 1], [0, 1]])
        return GeneratedSet(f"square-{self.n}", pts, np.full(self.n ** 2, 1.0 / self.n ** 2), 2.0,
                            math.sqrt(2) / self.n, outline=square)


@dataclass(frozen=True)
class UnitIntervalGrid:
    n: int
    placement: Placement = Placement()

    def _build(self) -> GeneratedSet:
        pts = ((np.arange(self.n) + 0.5) / self.n)[:, None]
        seg = SegmentSet([[[0.0], [1.0]]])
        return GeneratedSet(f"interval-{self.n}", pts, np.full(self.n, 1.0 / self.n), 1.0, 1.0 / self.n,
                            geometry=seg, outline=seg)


@dataclass(frozen=True)
class FinitePointSet:
    points: tuple
    placement: Placement = Placement()

    def _build(self) -> GeneratedSet:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if len(pts) > 1:
            from scipy.spatial import cKDTree

            d, _ = cKDTree(pts).query(pts, k=2)
            if np.any(d[:, 1] == 0):
                raise ValueError("duplicate points")
            cell = float(d[:, 1].min())
        else:
            cell = 0.0
        return GeneratedSet("points", pts, np.ones(len(pts)), 0.0, cell, outline=PointSet(pts))


@dataclass(frozen=True)
class DisjointUnion:
    members: tuple
    placement: Placement = Placement()


def _validate_level(spec):
    for attr in ("level", "segments", "n"):
        v = getattr(spec, attr, None)
        if v is not None and (not isinstance(v, (int, np.integer)) or v < 1):
            raise ValueError(f"{type(spec).__name__}.{attr} must be an integer >= 1")


def _place(gen: GeneratedSet, pl: Placement) -> GeneratedSet:
    if pl.is_identity:
        return gen

    def move(p):
        return pl.apply(p)

    def move_desc(desc):
        if isinstance(desc, SegmentSet):
            return desc.transformed(move)
        if isinstance(desc, PointSet):
            return PointSet(move(desc.points))
        return desc

    return GeneratedSet(
        gen.name, move(gen.points), gen.masses * pl.scale ** gen.exponent, gen.exponent,
        gen.local_radius * pl.scale, move_desc(gen.geometry), move_desc(gen.outline),
        [_place(m, pl) for m in gen.members], gen.labels, gen.gap * pl.scale)


def _lift(points, dim):
    if points.shape[1] < dim:
        return np.hstack([points, np.zeros((len(points), dim - points.shape[1]))])
    return points


def _member_gap(a: GeneratedSet, b: GeneratedSet) -> float:
    da = a.outline if a.outline is not None else PointSet(a.points)
    db = b.outline if b.outline is not None else PointSet(b.points)
    return set_distance(da, db)


def _build_union(spec: DisjointUnion) -> GeneratedSet:
    if not spec.members:
        raise ValueError("empty disjoint union")
    parts = [generate(m) for m in spec.members]
    dim = max(p.points.shape[1] for p in parts)
    gap = math.inf
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            gap = min(gap, _member_gap(parts[i], parts[j]))
    if not gap > 0:
        raise ValueError(f"union members overlap or touch (gap {gap:.3g})")
    pts = np.vstack([_lift(p.points, dim) for p in parts])
    masses = np.concatenate([p.masses for p in parts])
    labels = np.concatenate([np.full(len(p), i) for i, p in enumerate(parts)])
    geoms = [p.geometry for p in parts]
    geometry = None
    if all(g is not None for g in geoms):
        geometry = SegmentSet(np.concatenate([
            np.stack([_lift(g.segments[:, 0], dim), _lift(g.segments[:, 1], dim)], axis=1) for g in geoms]))
    return GeneratedSet(
        "union(" + ",".join(p.name for p in parts) + ")", pts, masses, max(p.exponent for p in parts),
        max(p.local_radius for p in parts), geometry=geometry, outline=None, members=parts, labels=labels, gap=gap)


def generate(spec) -> GeneratedSet:
    """Build the atoms, measure and metadata described by ``spec``.

    Gasket level ``n`` gives ``3**n`` barycentres of mass ``3**-n``; the
    triangle boundary with ``m`` segments per side gives ``3m`` midpoints of
    mass ``1/m`` (total = perimeter); Cantor level ``n`` gives ``2**n``
    interval centres of mass ``2**-n``.  Masses of a placed copy scale by
    ``scale**exponent``.
    """
    _validate_level(spec)
    if isinstance(spec, DisjointUnion):
        return _place(_build_union(spec), spec.placement)
    return _place(spec._build(), spec.placement)


def gasket_boundary_pair(level: int) -> tuple[GeneratedSet, GeneratedSet]:
    """Gasket of the given level and the boundary of its triangle, the
    latter discretized at the same scale with its length measure."""
    if level < 2:
        raise ValueError("level must be >= 2")
    return generate(SierpinskiGasket(level)), generate(TriangleBoundary(2 ** level))


_KINDS = {
    "gasket": (SierpinskiGasket, "level"),
    "triangle-boundary": (TriangleBoundary, "segments"),
    "cantor": (CantorMiddleThirds, "level"),
    "square-grid": (UnitSquareGrid, "n"),
    "interval-grid": (UnitIntervalGrid, "n"),
}


def spec_from_dict(d: dict):
    """Parse ``{"kind": "gasket", "level": 5, "placement": {...}}`` style
    dictionaries (as found in experiment configs)."""
    d = dict(d)
    kind = d.pop("kind")
    pl = d.pop("placement", None) or {}
    placement = Placement(float(pl.get("scale", 1.0)), float(pl.get("rotation", 0.0)),
                          tuple(pl.get("translation", ())))
    if kind == "points":
        return FinitePointSet(tuple(map(tuple, d["points"])), placement)
    if kind == "union":
        return DisjointUnion(tuple(spec_from_dict(m) for m in d["members"]), placement)
    if kind not in _KINDS:
        raise ValueError(f"unknown fractal kind {kind!r}")
    cls, key = _KINDS[kind]
    return cls(int(d[key]), placement)


def union_of(specs: Sequence) -> DisjointUnion:
    return DisjointUnion(tuple(specs))
