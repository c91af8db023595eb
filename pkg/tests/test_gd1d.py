import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from gdwave.gd1d import (
    Closure,
    GdOps1d,
    GdParams,
    extrapolation_map,
    gd_basis_eval,
    half_bandwidth,
)
from oracles import dense_derivatives, dense_mass_and_stiffness, dense_values

CASES = [(n, N, c) for n in (3, 5, 7) for N in (n, 9, 12)
         for c in ("ghost", "extrapolation")]


def test_params_from_order():
    p = GdParams.from_order(5, 10, "extrapolation")
    assert p.m == 3 and p.n == 5 and p.h == 0.2
    assert p.ndof == 11
    assert GdParams.from_order(5, 10, "ghost").ndof == 15
    assert GdParams.from_order(5, 10, ("ghost", "extrapolation")).ndof == 13


@pytest.mark.parametrize("n,N", [(4, 10), (5, 4), (-1, 3)])
def test_params_reject_bad_input(n, N):
    with pytest.raises(ValueError):
        GdParams.from_order(n, N)


def test_basis_is_cardinal_on_grid():
    p = GdParams.from_order(5, 8)
    grid = -1.0 + p.h * np.arange(9)
    for k in range(9):
        np.testing.assert_allclose(gd_basis_eval(p, k, grid), np.eye(9)[k], atol=1e-14)


def test_basis_rejects_out_of_range_index():
    with pytest.raises(ValueError):
        gd_basis_eval(GdParams.from_order(3, 6), 20, 0.0)


@pytest.mark.parametrize("closure", ["ghost", "extrapolation"])
@pytest.mark.parametrize("n", [1, 3, 5, 7])
def test_reproduces_degree_n_polynomials(n, closure):
    p = GdParams.from_order(n, 2 * n + 1, closure)
    ops = GdOps1d(p)
    f = lambda x: (x + 0.3) ** n - 0.5 * x  # noqa: E731
    u = f(p.grid_points())
    np.testing.assert_allclose(ops.L @ u, f(ops.qnodes), atol=1e-11)
    df = n * (ops.qnodes + 0.3) ** (n - 1) - 0.5
    np.testing.assert_allclose(ops.D @ u, df, atol=1e-10)


def test_extrapolation_rows_sum_to_one():
    E = extrapolation_map(GdParams.from_order(7, 9, "extrapolation"))
    np.testing.assert_allclose(E.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("n,N,closure", CASES)
def test_operators_match_dense_oracle(n, N, closure):
    p = GdParams.from_order(n, N, closure)
    ops = GdOps1d(p)
    M, S = dense_mass_and_stiffness(p)
    scale = np.max(np.abs(M))
    assert np.max(np.abs(ops.M - M)) <= 1e-11 * max(1.0, scale)
    assert np.max(np.abs(ops.S - S)) <= 1e-11 * max(1.0, np.max(np.abs(S)))
    np.testing.assert_allclose(ops.L.toarray(), dense_values(p, ops.qnodes), atol=1e-12)
    np.testing.assert_allclose(ops.D.toarray(), dense_derivatives(p, ops.qnodes),
                               atol=1e-11)


@pytest.mark.parametrize("n,N,closure", CASES[::3])
def test_mass_banded_and_solvable(n, N, closure):
    ops = GdOps1d(GdParams.from_order(n, N, closure))
    assert ops.bandwidth == half_bandwidth(ops.M) <= n
    b = np.random.default_rng(0).standard_normal(ops.ndof)
    np.testing.assert_allclose(ops.M @ ops.solve_mass(b), b, atol=1e-10)


@pytest.mark.parametrize("closure", ["ghost", "extrapolation"])
def test_summation_by_parts(closure):
    ops = GdOps1d(GdParams.from_order(5, 11, closure))
    B = ops.eval_matrix([-1.0, 1.0]).toarray()
    np.testing.assert_allclose(ops.S + ops.S.T, np.outer(B[1], B[1]) - np.outer(B[0], B[0]),
                               atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([3, 5, 7]), st.integers(0, 5),
       st.lists(st.floats(-1, 1), min_size=1, max_size=5))
def test_eval_matrix_matches_dense(n, extra, pts):
    p = GdParams.from_order(n, n + extra, Closure.EXTRAPOLATION)
    ops = GdOps1d(p)
    x = np.array(pts)
    E = ops.eval_matrix(x)
    assert sp.issparse(E)
    np.testing.assert_allclose(E.toarray(), dense_values(p, x), atol=1e-11)


def test_refined_params_double_subcells():
    p = GdParams.from_order(3, 6, "extrapolation").refined()
    assert p.nsub == 12 and p.closure == (Closure.EXTRAPOLATION,) * 2
