import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etlpv.errors import DimensionMismatch, InvalidPhysicalParameter, OutOfPolytope
from etlpv.lpv import (ParameterPolytope, PolytopicLpvModel, SchedulingMap, SchedulingValue, VertexMatrices,
                       build_unicycle_lpv, convex_coordinates, coordinates_rows, euler_discretize, evaluate_model,
                       heading_and_global_positions, unicycle_continuous)

INTERVAL = ParameterPolytope.interval(-2.0, 2.0)


@pytest.mark.parametrize("theta, alpha", [(-2.0, (1.0, 0.0)), (0.0, (0.5, 0.5)), (1.0, (0.25, 0.75))])
def test_interval_coordinates(theta, alpha):
    sv = convex_coordinates(INTERVAL, [theta])
    np.testing.assert_allclose(sv.alpha, alpha, atol=1e-15)


def test_outside_interval_raises_unless_clamped():
    with pytest.raises(OutOfPolytope):
        convex_coordinates(INTERVAL, [2.1])
    sv = convex_coordinates(INTERVAL, [2.1], clamp=True)
    np.testing.assert_array_equal(sv.alpha, [0.0, 1.0])
    assert sv.theta[0] == 2.0


def test_boundary_tolerance():
    convex_coordinates(INTERVAL, [2.0 + 5e-10])
    with pytest.raises(OutOfPolytope):
        convex_coordinates(INTERVAL, [2.0 + 5e-9])


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(0, 1))
def test_interval_matches_linear_interpolation_oracle(lo, width, u):
    poly = ParameterPolytope.interval(lo, lo + width)
    theta = lo + u * width
    sv = convex_coordinates(poly, [theta])
    oracle = np.array([(lo + width - theta) / width, (theta - lo) / width])
    np.testing.assert_allclose(sv.alpha, oracle, atol=1e-10)
    assert sv.alpha.min() >= 0 and abs(sv.alpha.sum() - 1) < 1e-12


def test_triangle_polytope_coordinates():
    tri = ParameterPolytope(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    sv = convex_coordinates(tri, [0.2, 0.3])
    np.testing.assert_allclose(sv.alpha @ tri.vertices, [0.2, 0.3], atol=1e-10)
    np.testing.assert_allclose(sv.alpha, [0.5, 0.2, 0.3], atol=1e-9)
    with pytest.raises(OutOfPolytope):
        convex_coordinates(tri, [0.8, 0.8])
    clamped = convex_coordinates(tri, [0.8, 0.8], clamp=True)
    np.testing.assert_allclose(clamped.theta, [0.5, 0.5], atol=1e-5)


def test_polytope_validation():
    with pytest.raises(ValueError):
        ParameterPolytope(np.array([[1.0], [1.0]]))
    with pytest.raises(ValueError):
        ParameterPolytope(np.array([[2.0], [1.0]]))


def test_coordinates_rows_reports_agent():
    model = build_unicycle_lpv()
    with pytest.raises(OutOfPolytope) as info:
        coordinates_rows(model, np.array([[0.0], [5.0]]))
    assert info.value.agent == 1


def _two_vertex_model(rng):
    verts = tuple(VertexMatrices(rng.normal(size=(3, 3)), rng.normal(size=(3, 2)), rng.normal(size=(3, 1)),
                                 rng.normal(size=(2, 3))) for _ in range(2))
    return PolytopicLpvModel(ParameterPolytope.interval(0.0, 1.0), verts, SchedulingMap("state_component", 0))


def test_evaluate_model_vertex_and_elementwise_oracle():
    rng = np.random.default_rng(3)
    model = _two_vertex_model(rng)
    out = evaluate_model(model, SchedulingValue(np.array([0.0]), np.array([1.0, 0.0])))
    for name in VertexMatrices._fields:
        np.testing.assert_array_equal(getattr(out, name), getattr(model.vertex_matrices[0], name))
    alpha = rng.dirichlet([1, 1])
    blended = evaluate_model(model, SchedulingValue(alpha @ model.polytope.vertices, alpha))
    for name in VertexMatrices._fields:
        M = getattr(blended, name)
        for i in range(M.shape[0]):
            for j in range(M.shape[1]):
                ref = sum(alpha[l] * getattr(model.vertex_matrices[l], name)[i, j] for l in range(2))
                assert abs(M[i, j] - ref) <= 1e-14


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 1))
def test_affinity_in_theta(t1, t2, lam):
    model = build_unicycle_lpv()
    ev = lambda t: model.evaluate(model.coordinates([t]))  # noqa: E731
    mid = ev(lam * t1 + (1 - lam) * t2)
    a, b = ev(t1), ev(t2)
    for name in VertexMatrices._fields:
        np.testing.assert_allclose(getattr(mid, name), lam * getattr(a, name) + (1 - lam) * getattr(b, name),
                                   atol=1e-12)


def test_unicycle_continuous_entries():
    A, _ = unicycle_continuous(1.0, 1.0, 0.5, 0.0)
    assert not A[:2, :2].any()
    A, _ = unicycle_continuous(1.0, 1.0, 0.5, 1.0)
    assert (A[0, 1], A[1, 0]) == (2.0, -2.0)
    _, B = unicycle_continuous(2.0, 1.0, 0.5, 0.0)
    assert (B[2, 0], B[3, 1]) == (0.5, 0.5)


@pytest.mark.parametrize("bad", [dict(m=0.0), dict(I=-1.0), dict(d=0.0)])
def test_unicycle_rejects_nonpositive(bad):
    params = dict(m=1.0, I=1.0, d=0.5, v_t=0.0) | bad
    with pytest.raises(InvalidPhysicalParameter):
        unicycle_continuous(**params)


def test_euler_discretize():
    A_c, B_c = unicycle_continuous(1.0, 1.0, 0.5, 1.0)
    A_d, B_d = euler_discretize(A_c, B_c, 1e-300)
    np.testing.assert_allclose(A_d, np.eye(4), rtol=0, atol=1e-299)
    assert np.abs(B_d).max() < 1e-299
    A_d, _ = euler_discretize(A_c, B_c, 0.01)
    assert A_d[0, 1] == 0.02
    rng = np.random.default_rng(0)
    M = rng.normal(size=(4, 4))
    A_d, _ = euler_discretize(M, np.zeros((4, 1)), 0.01)
    for i in range(4):
        for j in range(4):
            assert A_d[i, j] == (1.0 if i == j else 0.0) + 0.01 * M[i, j]
    with pytest.raises(ValueError):
        euler_discretize(M, np.zeros((4, 1)), 0.0)


def test_unicycle_vertices_differ_only_in_coupling():
    model = build_unicycle_lpv(vt_range=(-1.0, 1.0), d=0.5, Ts=0.01)
    A0, A1 = model.vertex_matrices[0].A, model.vertex_matrices[1].A
    diff = A1 - A0
    expected = np.zeros((4, 4))
    expected[0, 1], expected[1, 0] = 0.04, -0.04
    np.testing.assert_allclose(diff, expected, atol=1e-15)
    mid = model.evaluate(model.coordinates([0.0]))
    np.testing.assert_allclose(mid.A[:2, :2], np.eye(2), atol=1e-15)
    back = model.evaluate(model.coordinates([-1.0]))
    np.testing.assert_array_equal(back.A, A0)
    assert np.array_equal(model.vertex_matrices[0].Bw, model.vertex_matrices[0].Bu)
    assert model.dims == (4, 2, 2, 2)
    assert model.scheduling_map.identifier == "state_component:3"


def test_model_dimension_checks():
    rng = np.random.default_rng(0)
    good = VertexMatrices(np.eye(2), np.ones((2, 1)), np.ones((2, 1)), np.ones((1, 2)))
    bad = VertexMatrices(np.eye(3), np.ones((3, 1)), np.ones((3, 1)), np.ones((1, 3)))
    with pytest.raises(DimensionMismatch):
        PolytopicLpvModel(ParameterPolytope.interval(0, 1), (good, bad), SchedulingMap("state_component", 0))
    with pytest.raises(DimensionMismatch):
        PolytopicLpvModel(ParameterPolytope.interval(0, 1), (good,), SchedulingMap("state_component", 0))
    with pytest.raises(DimensionMismatch):
        PolytopicLpvModel(ParameterPolytope.interval(0, 1), (good, good), SchedulingMap("state_component", 5))
    del rng


def test_scheduling_map_parse():
    assert SchedulingMap.parse("state_component:2")(np.arange(4.0))[0] == 2.0
    assert SchedulingMap.parse("constant", [0.5])(np.zeros(3))[0] == 0.5
    with pytest.raises(ValueError):
        SchedulingMap.parse("velocity")


def test_heading_reconstruction():
    # constant lateral velocity 0.5 m/s with d = 0.5 gives omega = 1 rad/s
    states = np.tile([1.0, 0.0, 0.0, 0.5], (101, 1))
    phi, xy = heading_and_global_positions(states, d=0.5, Ts=0.01)
    assert phi[-1] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(xy[-1], [np.cos(1.0), np.sin(1.0)], atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(xy, axis=1), 1.0, atol=1e-12)
