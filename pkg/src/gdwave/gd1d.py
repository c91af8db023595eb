"""One-dimensional Galerkin difference (GD) basis and banded operators.

Grid points ``r_j = -1 + j h`` with ``h = 2 / N``.  On subcell ``[r_i, r_{i+1}]``
a GD function is the degree ``n = 2m - 1`` Lagrange interpolant of the ``2m``
grid values ``u_{i+1-m} .. u_{i+m}``.  Indices outside ``0..N`` are either
stored (ghost closure) or filled by degree-``n`` extrapolation from the ``n+1``
nearest interior values (extrapolation closure); each end picks independently.

DOF vectors are ordered by increasing grid index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from gdwave.quadrule import (
    Quad1d,
    lagrange_deriv_matrix,
    lagrange_interp_matrix,
    legendre_gauss,
)


class Closure(str, enum.Enum):
    GHOST = "ghost"
    EXTRAPOLATION = "extrapolation"


def _as_closure_pair(closure) -> tuple[Closure, Closure]:
    if isinstance(closure, (tuple, list)):
        left, right = closure
        return Closure(left), Closure(right)
    c = Closure(closure)
    return c, c


@dataclass(frozen=True)
class GdParams:
    m: int
    nsub: int
    closure: tuple[Closure, Closure] = (Closure.GHOST, Closure.GHOST)

    def __post_init__(self):
        object.__setattr__(self, "closure", _as_closure_pair(self.closure))
        if self.m < 1:
            raise ValueError(f"half-stencil width m must be >= 1, got {self.m}")
        if self.nsub < self.n:
            raise ValueError(
                f"need at least n={self.n} subcells, got nsub={self.nsub}")

    @classmethod
    def from_order(cls, n: int, nsub: int, closure="ghost") -> "GdParams":
        if n < 1 or n % 2 == 0:
            raise ValueError(f"GD order must be odd and positive, got {n}")
        return cls((n + 1) // 2, nsub, closure)

    @property
    def n(self) -> int:
        return 2 * self.m - 1

    @property
    def h(self) -> float:
        return 2.0 / self.nsub

    @property
    def full_range(self) -> tuple[int, int]:
        """Inclusive ghost-indexed DOF range ``(1 - m, N + m - 1)``."""
        return 1 - self.m, self.nsub + self.m - 1

    @property
    def stored_range(self) -> tuple[int, int]:
        left, right = self.closure
        lo = 1 - self.m if left is Closure.GHOST else 0
        hi = self.nsub + self.m - 1 if right is Closure.GHOST else self.nsub
        return lo, hi

    @property
    def ndof_full(self) -> int:
        return self.nsub + 2 * self.m - 1

    @property
    def ndof(self) -> int:
        lo, hi = self.stored_range
        return hi - lo + 1

    def grid_points(self, stored: bool = True) -> np.ndarray:
        lo, hi = self.stored_range if stored else self.full_range
        return -1.0 + self.h * np.arange(lo, hi + 1)

    def refined(self, factor: int = 2) -> "GdParams":
        return GdParams(self.m, self.nsub * factor, self.closure)


def _stencil_nodes(m: int) -> np.ndarray:
    return np.arange(1 - m, m + 1, dtype=float)


def gd_basis_eval(params: GdParams, k: int, r) -> np.ndarray:
    """Ghost-indexed basis function ``phi_k(r) = phi(r + 1 - k h)``."""
    lo, hi = params.full_range
    if not lo <= k <= hi:
        raise ValueError(f"basis index {k} outside [{lo}, {hi}]")
    m, h = params.m, params.h
    x = (np.atleast_1d(np.asarray(r, dtype=float)) + 1.0) / h - k
    out = np.zeros_like(x)
    nodes = _stencil_nodes(m)
    inside = np.abs(x) < m
    if not np.any(inside):
        return out.reshape(np.shape(r))
    xi = x[inside]
    # cell [c, c+1] containing xi; right-closed as in the piecewise definition
    c = np.ceil(xi) - 1.0
    # stencil of cell c is c+1-m .. c+m; node 0 sits at local index -c
    local = xi - c
    vals = np.empty_like(xi)
    for cell in np.unique(c):
        sel = c == cell
        a = lagrange_interp_matrix(nodes, local[sel])
        j = int(-cell) - (1 - m)
        vals[sel] = a[:, j]
    out[inside] = vals
    return out.reshape(np.shape(r))


def extrapolation_weights(source, target: float) -> np.ndarray:
    """Weights of polynomial extrapolation through ``source`` to ``target``."""
    return lagrange_interp_matrix(np.asarray(source, dtype=float), [target])[0]


def extrapolation_map(params: GdParams) -> np.ndarray:
    """Closure map ``E`` from stored DOFs to the ghost-indexed DOF set."""
    flo, fhi = params.full_range
    slo, shi = params.stored_range
    n, N = params.n, params.nsub
    E = np.zeros((params.ndof_full, params.ndof))
    for j in range(flo, fhi + 1):
        row = j - flo
        if slo <= j <= shi:
            E[row, j - slo] = 1.0
        elif j < slo:
            src = np.arange(0, n + 1)
            E[row, src - slo] = extrapolation_weights(src, j)
        else:
            src = np.arange(N - n, N + 1)
            E[row, src - slo] = extrapolation_weights(src, j)
    return E


def _locate(params: GdParams, r: np.ndarray):
    N, h = params.nsub, params.h
    i = np.floor((r + 1.0) / h).astype(int)
    i = np.clip(i, 0, N - 1)
    xi = (r + 1.0) / h - i
    return i, xi


def _point_matrix(params: GdParams, r, deriv: bool) -> sp.csr_matrix:
    r = np.atleast_1d(np.asarray(r, dtype=float))
    m, h = params.m, params.h
    i, xi = _locate(params, r)
    nodes = _stencil_nodes(m)
    if deriv:
        vals = lagrange_deriv_matrix(nodes, xi) / h
    else:
        vals = lagrange_interp_matrix(nodes, xi)
    flo = params.full_range[0]
    cols = (i[:, None] + np.arange(1 - m, m + 1)[None, :]) - flo
    rows = np.repeat(np.arange(len(r)), 2 * m)
    return sp.csr_matrix((vals.ravel(), (rows, cols.ravel())),
                         shape=(len(r), params.ndof_full))


def _band_upper(a: np.ndarray, u: int) -> np.ndarray:
    n = a.shape[0]
    ab = np.zeros((u + 1, n))
    for d in range(u + 1):
        ab[u - d, d:] = np.diagonal(a, d)
    return ab


def half_bandwidth(a) -> int:
    a = a.toarray() if sp.issparse(a) else np.asarray(a)
    i, j = np.nonzero(a)
    return int(np.max(np.abs(i - j))) if i.size else 0


class GdOps1d:
    """Banded 1D GD operators on stored DOFs.

    ``L``/``D`` map stored DOFs to values/derivatives at the composite subcell
    quadrature nodes, ``W`` holds the composite weights (``h/2`` scaled),
    ``M = L^T W L`` and ``S = L^T W D``.
    """

    def __init__(self, params: GdParams, subcell_quad: Quad1d | None = None):
        if subcell_quad is None:
            subcell_quad = legendre_gauss(2 * params.m)
        if len(subcell_quad) < 2 * params.m:
            raise ValueError(
                f"subcell quadrature needs >= {2 * params.m} points, "
                f"got {len(subcell_quad)}")
        self.params = params
        self.quad = subcell_quad
        N, h = params.nsub, params.h

        starts = -1.0 + h * np.arange(N)
        self.qnodes = (starts[:, None]
                       + 0.5 * h * (subcell_quad.nodes[None, :] + 1.0)).ravel()
        self.W = np.tile(0.5 * h * subcell_quad.weights, N)

        self.E = extrapolation_map(params)
        E = sp.csr_matrix(self.E)
        self.L = (_point_matrix(params, self.qnodes, False) @ E).tocsr()
        self.D = (_point_matrix(params, self.qnodes, True) @ E).tocsr()
        self.LT = self.L.T.tocsr()
        self.DT = self.D.T.tocsr()

        WL = self.L.multiply(self.W[:, None]).tocsr()
        self.M = (self.LT @ WL).toarray()
        self.S = (WL.T @ self.D).toarray()

        self.bandwidth = half_bandwidth(self.M)
        try:
            self._chol = sla.cholesky_banded(_band_upper(self.M, self.bandwidth))
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"GD mass matrix not SPD for {params}") from exc

    @property
    def ndof(self) -> int:
        return self.params.ndof

    @property
    def nq(self) -> int:
        return len(self.qnodes)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.params.grid_points(stored=True)

    def eval_matrix(self, points) -> sp.csr_matrix:
        """Evaluation of the GD interpolant at arbitrary points in [-1, 1]."""
        return (_point_matrix(self.params, points, False) @ sp.csr_matrix(self.E)).tocsr()

    def deriv_matrix(self, points) -> sp.csr_matrix:
        return (_point_matrix(self.params, points, True) @ sp.csr_matrix(self.E)).tocsr()

    def solve_mass(self, b: np.ndarray) -> np.ndarray:
        """``M^{-1} b`` along the first axis by banded Cholesky."""
        return sla.cho_solve_banded((self._chol, False), b, check_finite=False)

    def breakpoints(self) -> np.ndarray:
        return -1.0 + self.params.h * np.arange(self.params.nsub + 1)


def build_gd_ops(params: GdParams, subcell_quad: Quad1d | None = None) -> GdOps1d:
    return GdOps1d(params, subcell_quad)
