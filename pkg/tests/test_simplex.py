import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gdwave.simplex import (
    MAX_ORDER,
    SimplexOps,
    build_simplex_ops,
    face_points,
    jacobi_p,
    modal_basis,
    triangle_quadrature,
    warp_blend_nodes,
)


def monomial_integral(a, b):
    """Exact integral of ``r^a s^b`` over the reference triangle (numpy 1D Gauss)."""
    x, w = np.polynomial.legendre.leggauss(a + b + 4)
    tot = 0.0
    for si, wi in zip(x, w):
        # r runs from -1 to -s
        half = 0.5 * (-si + 1.0)
        r = -1.0 + half * (x + 1.0)
        tot += wi * si ** b * half * np.sum(w * r ** a)
    return tot


@pytest.mark.parametrize("strength", [2, 5, 8, 12])
def test_quadrature_exact(strength):
    r, s, w = triangle_quadrature(strength)
    assert np.all(w > 0) and abs(np.sum(w) - 2.0) < 1e-14
    for a in range(strength + 1):
        for b in range(strength + 1 - a):
            assert abs(np.sum(w * r ** a * s ** b) - monomial_integral(a, b)) < 1e-13


@pytest.mark.parametrize("n", [1, 3, 5, 7])
def test_modal_basis_orthonormal(n):
    r, s, w = triangle_quadrature(2 * n)
    V = modal_basis(n, r, s)
    np.testing.assert_allclose(V.T @ (w[:, None] * V), np.eye(V.shape[1]), atol=1e-12)


def test_jacobi_matches_legendre():
    x = np.linspace(-1, 1, 9)
    leg = np.polynomial.legendre.legval(x, [0, 0, 0, 1])
    np.testing.assert_allclose(jacobi_p(x, 0.0, 0.0, 3), leg * np.sqrt(3.5), atol=1e-13)


@pytest.mark.parametrize("n", [2, 5, 9])
def test_nodes_inside_and_on_faces(n):
    r, s = warp_blend_nodes(n)
    assert len(r) == (n + 1) * (n + 2) // 2
    assert np.all(r >= -1 - 1e-12) and np.all(s >= -1 - 1e-12) and np.all(r + s <= 1e-12)
    assert np.sum(np.abs(s + 1) < 1e-12) == n + 1


@pytest.mark.parametrize("n", [3, 5, 7])
def test_operators_exact_on_polynomials(n):
    ops = build_simplex_ops(n)
    f = lambda r, s: (r + 0.2) ** n - s ** (n - 1) * r  # noqa: E731
    fr = lambda r, s: n * (r + 0.2) ** (n - 1) - s ** (n - 1)  # noqa: E731
    fs = lambda r, s: -(n - 1) * s ** (n - 2) * r  # noqa: E731
    u = f(ops.r, ops.s)
    np.testing.assert_allclose(ops.interp(u), f(ops.rq, ops.sq), atol=1e-11)
    np.testing.assert_allclose(ops.dr(u), fr(ops.rq, ops.sq), atol=1e-10)
    np.testing.assert_allclose(ops.ds(u), fs(ops.rq, ops.sq), atol=1e-10)
    M_dense = ops.Vq.T @ np.diag(ops.W) @ ops.Vq
    np.testing.assert_allclose(ops.M, M_dense, atol=1e-13)
    np.testing.assert_allclose(ops.mass_inv(ops.mass(u)), u, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2), st.lists(st.floats(-1, 1), min_size=1, max_size=4), st.integers(1, 6))
def test_face_trace_of_polynomial(face, ts, n):
    ops = build_simplex_ops(n)
    u = ops.r ** n + 2 * ops.s
    t = np.array(ts)
    r, s = face_points(face, t)
    np.testing.assert_allclose(ops.face_trace(face, t) @ u, r ** n + 2 * s, atol=1e-10)


def test_face_parameter_runs_counterclockwise():
    verts = [face_points(f, np.array([-1.0, 1.0])) for f in range(3)]
    starts = [(v[0][0], v[1][0]) for v in verts]
    assert starts == [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)]


def test_order_limits():
    with pytest.raises(ValueError):
        SimplexOps(MAX_ORDER + 1)
    with pytest.raises(ValueError):
        SimplexOps(3, quad_strength=4)
    assert build_simplex_ops(4) is build_simplex_ops(4)
