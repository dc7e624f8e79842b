import math

import numpy as np
import pytest

from ahlfors.fractals import (CANTOR_DIM, GASKET_DIM, TRIANGLE, CantorMiddleThirds, DisjointUnion, FinitePointSet,
                              Placement, SierpinskiGasket, TriangleBoundary, UnitIntervalGrid, UnitSquareGrid,
                              gasket_boundary_pair, generate, spec_from_dict, union_of)
from ahlfors.space import SegmentSet, distance_to_set


def test_gasket_level2_counts():
    g = generate(SierpinskiGasket(2))
    assert len(g) == 9
    assert np.allclose(g.masses, 1 / 9)
    assert g.total_mass == pytest.approx(1.0, abs=1e-12)


def test_gasket_exponent():
    assert generate(SierpinskiGasket(3)).exponent == pytest.approx(1.5849625007211563)
    assert GASKET_DIM == pytest.approx(math.log(3) / math.log(2))


def test_cantor_level3():
    c = generate(CantorMiddleThirds(3))
    assert len(c) == 8
    assert np.allclose(c.masses, 1 / 8)
    assert c.exponent == pytest.approx(0.63093, abs=1e-5)


def test_cantor_box_count_oracle():
    # occupied triadic boxes at scale 3^-k double each step: slope log2/log3
    x = generate(CantorMiddleThirds(6)).points[:, 0]
    counts = [np.unique(np.floor(x * 3 ** k)).size for k in range(1, 6)]
    slope = np.polyfit(np.arange(1, 6) * math.log(3), np.log(counts), 1)[0]
    assert slope == pytest.approx(CANTOR_DIM, abs=1e-9)


def test_boundary_pair_on_sides():
    g, b = gasket_boundary_pair(2)
    sp = b.space()
    d = distance_to_set(sp, np.arange(len(sp)), SegmentSet.polygon(TRIANGLE))
    assert np.all(d < 1e-15)
    assert g.exponent == pytest.approx(GASKET_DIM) and b.exponent == 1.0


def test_boundary_mass_is_perimeter():
    _, b = gasket_boundary_pair(5)
    assert b.total_mass == pytest.approx(3.0, abs=1e-12)


def test_boundary_pair_rejects_low_level():
    with pytest.raises(ValueError):
        gasket_boundary_pair(1)


@pytest.mark.parametrize("spec,total", [(SierpinskiGasket(7), 1.0), (CantorMiddleThirds(9), 1.0),
                                        (TriangleBoundary(64), 3.0), (UnitSquareGrid(33), 1.0),
                                        (UnitIntervalGrid(100), 1.0)])
def test_mass_totals(spec, total):
    assert abs(generate(spec).total_mass - total) < 1e-12


def test_gasket_refinement_consistency():
    coarse = generate(SierpinskiGasket(4)).space()
    fine = generate(SierpinskiGasket(5))
    from scipy.spatial import cKDTree

    dist, _ = cKDTree(coarse.points).query(fine.points)
    assert dist.max() < 2.0 ** -4


def test_gasket_atoms_off_boundary():
    g, b = gasket_boundary_pair(5)
    d = distance_to_set(g.space(), np.arange(len(g)), b.subset())
    assert d.min() > 0


def test_union_gap_matches_declared():
    a = UnitIntervalGrid(16, Placement(0.5, 0.0, (0.0, 0.0)))
    b = UnitIntervalGrid(16, Placement(0.5, 0.0, (0.0, 0.3)))
    u = generate(DisjointUnion((a, b)))
    assert abs(u.gap - 0.3) < 1e-9
    assert len(u) == 32 and u.labels.tolist() == [0] * 16 + [1] * 16


def test_union_rejects_touching():
    a = UnitIntervalGrid(8)
    b = UnitIntervalGrid(8, Placement(1.0, 0.0, (1.0,)))
    with pytest.raises(ValueError):
        generate(union_of([a, b]))


def test_placement_scales_mass():
    g = generate(SierpinskiGasket(3, Placement(0.5)))
    assert g.total_mass == pytest.approx(0.5 ** GASKET_DIM)
    assert g.local_radius == pytest.approx(0.5 * 2 ** -3)


def test_placement_rotation_preserves_distances():
    base = generate(SierpinskiGasket(3))
    rot = generate(SierpinskiGasket(3, Placement(1.0, 0.7, (2.0, -1.0))))
    assert rot.space().diameter == pytest.approx(base.space().diameter)


def test_finite_point_set():
    f = generate(FinitePointSet(((0.0, 0.0), (1.0, 0.0))))
    assert len(f) == 2 and f.exponent == 0.0
    with pytest.raises(ValueError):
        generate(FinitePointSet(((0.0, 0.0), (0.0, 0.0))))


def test_level_validation():
    with pytest.raises(ValueError):
        generate(SierpinskiGasket(0))
    with pytest.raises(ValueError):
        Placement(0.0)


def test_spec_from_dict_roundtrip():
    spec = spec_from_dict({"kind": "union", "members": [
        {"kind": "interval-grid", "n": 8, "placement": {"scale": 0.2, "translation": [0.0, 0.0]}},
        {"kind": "cantor", "level": 3, "placement": {"scale": 0.2, "translation": [0.0, 0.5]}},
    ]})
    g = generate(spec)
    assert len(g) == 16 and g.gap == pytest.approx(0.5)
    with pytest.raises(ValueError):
        spec_from_dict({"kind": "dragon", "level": 2})


def test_metadata_fields(gasket6):
    md = gasket6.metadata()
    assert md["atoms"] == 729 and md["r0"] == 2 ** -6 and md["gap"] is None
