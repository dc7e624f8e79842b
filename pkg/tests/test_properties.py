import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ahlfors.maximal import DiscreteMeasure, ball_mass_matrix, maximal_of_measure
from ahlfors.space import Ball, MetricMeasureSpace, QuasiMetric, ball_query, greedy_net, log_radii
from ahlfors.weights import ap_ball_product

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

coords = st.floats(-10, 10, allow_nan=False, width=64)


@st.composite
def clouds(draw, min_n=2, max_n=60, dim=2):
    n = draw(st.integers(min_n, max_n))
    pts = draw(arrays(np.float64, (n, dim), elements=coords, unique=False))
    pts = np.unique(pts, axis=0)
    masses = draw(arrays(np.float64, len(pts), elements=st.floats(0.01, 5.0)))
    return MetricMeasureSpace(pts, masses)


radii = st.floats(1e-3, 30.0)


@SETTINGS
@given(clouds(), radii, radii, st.data())
def test_ball_monotone(sp, r1, r2, data):
    c = data.draw(st.integers(0, len(sp) - 1))
    lo, hi = sorted((r1, r2))
    small = set(ball_query(sp, Ball(np.array([c]), lo)).tolist())
    big = set(ball_query(sp, Ball(np.array([c]), hi)).tolist())
    assert small <= big


@SETTINGS
@given(clouds(), radii, st.booleans(), st.data())
def test_index_equals_scan(sp, r, closed, data):
    c = data.draw(st.integers(0, len(sp) - 1))
    b = Ball(np.array([c]), r, closed)
    assert np.array_equal(ball_query(sp, b), ball_query(sp, b, use_index=False))


@SETTINGS
@given(clouds(), st.floats(0.01, 20.0))
def test_net_disperse_and_dense(sp, r):
    net = greedy_net(sp, r)
    D = sp.distances_from(net, net)
    off = ~np.eye(len(net), dtype=bool)
    assert np.all(D[off] >= r)
    assert np.all(sp.distances_from(np.arange(len(sp)), net).min(axis=1) < r)


@SETTINGS
@given(clouds(min_n=3))
def test_euclidean_triangle(sp):
    rep = sp.metric.check_axioms(sp.points, n_triples=2000)
    assert rep["triangle_ok"]


@SETTINGS
@given(clouds(min_n=3, max_n=30), st.integers(-3, 3), st.floats(0.1, 10.0))
def test_maximal_homogeneity(sp, k, c):
    radii = log_radii(0.05, 40.0, 6)
    nu = DiscreteMeasure.of_space(sp, np.arange(0, len(sp), 2))
    base = maximal_of_measure(sp, nu, radii=radii).values
    # power-of-two scalings are exact in floating point
    assert np.array_equal(maximal_of_measure(sp, nu.scaled(2.0 ** k), radii=radii).values, 2.0 ** k * base)
    np.testing.assert_allclose(maximal_of_measure(sp, nu.scaled(c), radii=radii).values, c * base, rtol=1e-12)


@SETTINGS
@given(clouds(min_n=3, max_n=30), st.data())
def test_maximal_subadditive_and_witness(sp, data):
    radii = log_radii(0.05, 40.0, 6)
    n = len(sp)
    m1 = data.draw(arrays(np.float64, n, elements=st.floats(0.01, 3.0)))
    m2 = data.draw(arrays(np.float64, n, elements=st.floats(0.01, 3.0)))
    nu1 = DiscreteMeasure(m1, points=sp.points)
    nu2 = DiscreteMeasure(m2, points=sp.points)
    M1 = maximal_of_measure(sp, nu1, radii=radii).values
    M2 = maximal_of_measure(sp, nu2, radii=radii).values
    M12 = maximal_of_measure(sp, nu1 + nu2, radii=radii).values
    assert np.all(M12 <= (M1 + M2) * (1 + 1e-12))
    num = ball_mass_matrix(sp, sp.points, sp.points, m1, radii)
    den = ball_mass_matrix(sp, sp.points, sp.points, sp.masses, radii)
    assert np.all(M1[:, None] >= num / den)


@st.composite
def weighted_ball(draw):
    sp = draw(clouds(min_n=2, max_n=40, dim=1))
    w = draw(arrays(np.float64, len(sp), elements=st.floats(1e-3, 1e3)))
    c = draw(st.integers(0, len(sp) - 1))
    r = draw(st.floats(0.5, 30.0))
    return sp, w, Ball(np.array([c]), r)


@SETTINGS
@given(weighted_ball(), st.floats(1.01, 6.0))
def test_holder_floor(args, p):
    sp, w, ball = args
    assert ap_ball_product(sp, w, ball, p) >= 1 - 1e-12
    assert ap_ball_product(sp, w, ball, 1.0) >= 1 - 1e-12


@SETTINGS
@given(weighted_ball(), st.floats(1.01, 4.0), st.floats(0.01, 3.0))
def test_nesting(args, p, dq):
    sp, w, ball = args
    q = p + dq
    assert ap_ball_product(sp, w, ball, q) <= ap_ball_product(sp, w, ball, p) * (1 + 1e-12)
    assert ap_ball_product(sp, w, ball, p) <= ap_ball_product(sp, w, ball, 1.0) * (1 + 1e-12)


@SETTINGS
@given(weighted_ball(), st.floats(1.0, 5.0), st.integers(-20, 20), st.floats(1e-3, 1e3))
def test_scaling_invariance(args, p, k, c):
    sp, w, ball = args
    base = ap_ball_product(sp, w, ball, p)
    assert ap_ball_product(sp, 2.0 ** k * w, ball, p) == base
    assert abs(ap_ball_product(sp, c * w, ball, p) - base) <= 1e-12 * base


@SETTINGS
@given(st.integers(2, 25), st.floats(1.0, 3.0))
def test_table_metric_consistent(n, K):
    rng = np.random.default_rng(n)
    pts = rng.random((n, 2))
    D = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    qm = QuasiMetric.from_table(D, K=K)
    assert qm.check_axioms(np.arange(n), n_triples=500)["triangle_ok"]
