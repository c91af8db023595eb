from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gdwave.geometry import (
    AffineMap,
    ArcEdge,
    CompositeMap,
    CurvedTriangleMap,
    InvalidGeometryError,
    JacMode,
    LineEdge,
    ProjTestMap,
    SkewBoxMap,
    TransfiniteMap,
    boundary_normal_flux,
    build_metric_terms,
    corner_constrained_fit,
    exact_jacobian,
    fit_interface_curve,
    interpolate_coordinates,
    project_coordinates,
    volume_divergence,
)
from gdwave.meshes import gd_block_ops, skew_box_mesh
from gdwave.simplex import build_simplex_ops

RS = (np.array([-0.8, -0.1, 0.3, 0.9]), np.array([0.5, -0.7, 0.2, 0.95]))


def central_jacobian(cmap, r, s, h=1e-6):
    xr = [(a - b) / (2 * h) for a, b in zip(cmap(r + h, s), cmap(r - h, s))]
    xs = [(a - b) / (2 * h) for a, b in zip(cmap(r, s + h), cmap(r, s - h))]
    return xr[0], xs[0], xr[1], xs[1]


@pytest.mark.parametrize("cmap", [
    SkewBoxMap(),
    ProjTestMap(0.125),
    AffineMap(np.array([[2.0, 0.3], [-0.1, 1.5]]), np.array([1.0, -2.0])),
    CompositeMap(SkewBoxMap(), AffineMap.from_box(0.0, 1.0, -1.0, 0.0)),
    TransfiniteMap((LineEdge((0, 0), (2, 0)), ArcEdge((0, 0), 2.0, 0.0, np.pi / 2),
                    LineEdge((0, 1), (0, 2)), LineEdge((0, 0), (0, 1)))),
])
def test_analytic_jacobian_matches_differences(cmap):
    r, s = RS
    for a, b in zip(cmap.jacobian(r, s), central_jacobian(cmap, r, s)):
        np.testing.assert_allclose(a, b, atol=1e-7)


def test_skew_map_is_identity_on_boundary():
    t = np.linspace(-1, 1, 7)
    m = SkewBoxMap()
    for r, s in ((t, -np.ones(7)), (np.ones(7), t)):
        x, y = m(r, s)
        np.testing.assert_allclose(x, r, atol=1e-15)
        np.testing.assert_allclose(y, s, atol=1e-15)


def test_projtest_with_zero_beta_is_identity():
    x, y = ProjTestMap(0.0)(*RS)
    np.testing.assert_array_equal(x, RS[0])
    np.testing.assert_array_equal(y, RS[1])


def test_affine_triangle_maps_vertices():
    v = [(1.0, 1.0), (3.0, 1.5), (0.5, 4.0)]
    m = AffineMap.from_triangle(*v)
    x, y = m(np.array([-1.0, 1.0, -1.0]), np.array([-1.0, -1.0, 1.0]))
    np.testing.assert_allclose(np.column_stack((x, y)), v)
    area = 0.5 * abs((v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
                     - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
    np.testing.assert_allclose(m.det(*RS), area / 2.0)


def test_curved_triangle_face_on_circle():
    c = np.sqrt(0.5)
    m = CurvedTriangleMap(np.array([(c, -c), (c, c), (0.2, 0.0)]), 0, (0.0, 0.0), 1.0)
    t = np.linspace(-1, 1, 9)
    x, y = m(t, -np.ones_like(t))
    np.testing.assert_allclose(np.hypot(x, y), 1.0, atol=1e-14)
    # the other faces stay straight
    x, y = m(-np.ones_like(t), -t)
    v0, v2 = np.array((c, -c)), np.array((0.2, 0.0))
    cross = (x - v0[0]) * (v2[1] - v0[1]) - (y - v0[1]) * (v2[0] - v0[0])
    np.testing.assert_allclose(cross, 0.0, atol=1e-14)


def test_transfinite_reproduces_edges():
    arc = ArcEdge((0.0, 0.0), 2.0, 0.0, np.pi / 2)
    m = TransfiniteMap((LineEdge((1, 0), (2, 0)), arc,
                        LineEdge((0, 1), (0, 2)), ArcEdge((0.0, 0.0), 1.0, 0.0, np.pi / 2)))
    t = np.linspace(-1, 1, 5)
    x, y = m(np.ones_like(t), t)
    np.testing.assert_allclose(np.hypot(x, y), 2.0, atol=1e-14)


@pytest.mark.parametrize("closure", ["ghost", "extrapolation"])
def test_affine_geometry_is_exact(closure):
    ops = gd_block_ops(3, 5, 6, closure)
    A = np.array([[2.0, 0.5], [0.0, 1.0]])
    m = AffineMap(A, np.array([0.1, 0.2]))
    geo = build_metric_terms(ops, *project_coordinates(ops, m))
    np.testing.assert_allclose(geo.Jq, 2.0, atol=1e-12)
    jrx, jry, jsx, jsy = geo.factors()
    np.testing.assert_allclose(jrx, A[1, 1], atol=1e-12)
    np.testing.assert_allclose(jry, -A[0, 1], atol=1e-12)


@pytest.mark.parametrize("n", [3, 5])
def test_metric_jacobian_converges(n):
    errs = []
    for N in (2 * n, 4 * n):
        ops = gd_block_ops(n, N, N, "ghost")
        m = ProjTestMap(0.125)
        geo = build_metric_terms(ops, *project_coordinates(ops, m))
        errs.append(np.max(np.abs(geo.Jq - exact_jacobian(ops, m))))
    assert errs[1] < errs[0] / 2 ** (n - 1.5)


def test_sqrtj_storage_converges_and_stays_positive():
    errs = []
    for N in (10, 20, 40):
        ops = gd_block_ops(5, N, N, "ghost")
        m = ProjTestMap(0.125)
        geo = build_metric_terms(ops, *project_coordinates(ops, m), jac_mode=JacMode.SQRTJ)
        assert np.all(geo.Jq > 0)
        errs.append(np.max(np.abs(geo.Jq - exact_jacobian(ops, m))))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 4.0)


def test_negative_jacobian_detected():
    ops = gd_block_ops(3, 3, 3, "ghost")
    geo = build_metric_terms(ops, *project_coordinates(ops, ProjTestMap(0.22)))
    geo2 = build_metric_terms(ops, *project_coordinates(ops, AffineMap(np.diag([1.0, -1.0]),
                                                                      np.zeros(2))))
    assert geo.valid
    assert not geo2.valid
    with pytest.raises(InvalidGeometryError):
        geo2.check()


def test_simplex_isoparametric_coordinates():
    ops = build_simplex_ops(4)
    m = AffineMap.from_triangle((0, 0), (1, 0), (0, 2))
    geo = build_metric_terms(ops, *interpolate_coordinates(ops, m))
    np.testing.assert_allclose(geo.Jq, 0.5, atol=1e-13)


@lru_cache(maxsize=None)
def skew_elements(n):
    return skew_box_mesh(n, "extrapolation", 0).elements


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([3, 5, 7]), st.integers(0, 3), st.integers(0, 2 ** 16))
def test_divergence_identity_on_skewed_quadrants(n, quadrant, seed):
    e = skew_elements(n)[quadrant]
    rng = np.random.default_rng(seed)
    vx, vy = rng.standard_normal((2, e.ndof))
    a = volume_divergence(e.ops, e.geo, vx, vy)
    b = boundary_normal_flux(e.ops, e.xdof, e.ydof, vx, vy)
    assert abs(a - b) <= 1e-12 * max(1.0, np.linalg.norm(vx) + np.linalg.norm(vy))


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2))
@settings(max_examples=20, deadline=None)
def test_corner_constrained_fit_pins_ends(ends):
    t = np.linspace(-1, 1, 15)
    f = np.sin(3 * t)
    c = corner_constrained_fit(t, f, np.ones_like(t), 3, ends[0], ends[1])
    np.testing.assert_allclose(np.polynomial.legendre.legval([-1.0, 1.0], c), ends, atol=1e-12)


def test_interface_curve_reproduces_polynomials():
    curve = fit_interface_curve(lambda t: (t ** 3, 1 - t ** 2), 3)
    t = np.linspace(-1, 1, 5)
    x, y = curve(t)
    np.testing.assert_allclose(x, t ** 3, atol=1e-13)
    np.testing.assert_allclose(y, 1 - t ** 2, atol=1e-13)
