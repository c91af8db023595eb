"""Nodal DG operators on the reference triangle.

Reference vertices are ``(-1,-1), (1,-1), (-1,1)``.  The modal basis is the
orthonormal Koornwinder (Dubiner) basis, the nodal set is the warp-and-blend
family, and volume integrals use a collapsed-coordinate Gauss rule.

Faces are numbered counterclockwise with parameter ``t`` in ``[-1, 1]``::

    face 0: (t, -1)     face 1: (-t, t)     face 2: (-1, -t)
"""

from __future__ import annotations

import warnings
from math import gamma

import numpy as np
import scipy.linalg as sla
from scipy.special import roots_jacobi

from gdwave.quadrule import legendre_gauss

MAX_ORDER = 11

# optimized blending parameters for warp-and-blend nodes, orders 1..15
_ALPHA_OPT = (0.0, 0.0, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832,
              1.3648, 1.4773, 1.4959, 1.5743, 1.5770, 1.6223, 1.6258)


def jacobi_p(x, alpha: float, beta: float, n: int) -> np.ndarray:
    """Orthonormal Jacobi polynomial ``P_n^{(alpha,beta)}`` on [-1, 1]."""
    x = np.asarray(x, dtype=float)
    g0 = (2.0 ** (alpha + beta + 1) / (alpha + beta + 1)
          * gamma(alpha + 1) * gamma(beta + 1) / gamma(alpha + beta + 1))
    p_prev = np.full_like(x, 1.0 / np.sqrt(g0))
    if n == 0:
        return p_prev
    g1 = (alpha + 1) * (beta + 1) / (alpha + beta + 3) * g0
    p = ((alpha + beta + 2) * x / 2 + (alpha - beta) / 2) / np.sqrt(g1)
    a_old = 2 / (2 + alpha + beta) * np.sqrt(
        (alpha + 1) * (beta + 1) / (alpha + beta + 3))
    for i in range(1, n):
        h1 = 2 * i + alpha + beta
        a_new = 2 / (h1 + 2) * np.sqrt(
            (i + 1) * (i + 1 + alpha + beta) * (i + 1 + alpha) * (i + 1 + beta)
            / (h1 + 1) / (h1 + 3))
        b_new = -(alpha ** 2 - beta ** 2) / h1 / (h1 + 2)
        p_prev, p = p, (-a_old * p_prev + (x - b_new) * p) / a_new
        a_old = a_new
    return p


def grad_jacobi_p(x, alpha: float, beta: float, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.zeros_like(x)
    return np.sqrt(n * (n + alpha + beta + 1)) * jacobi_p(x, alpha + 1, beta + 1, n - 1)


def jacobi_gauss_lobatto(n: int) -> np.ndarray:
    """Legendre-Gauss-Lobatto points (``n + 1`` of them), ascending."""
    if n == 1:
        return np.array([-1.0, 1.0])
    inner, _ = roots_jacobi(n - 1, 1.0, 1.0)
    return np.concatenate(([-1.0], np.sort(inner), [1.0]))


def _rs_to_ab(r, s):
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    a = np.full_like(r, -1.0)
    ok = np.abs(1.0 - s) > 1e-14
    a[ok] = 2.0 * (1.0 + r[ok]) / (1.0 - s[ok]) - 1.0
    return a, s


def _mode_indices(n: int):
    return [(i, j) for i in range(n + 1) for j in range(n + 1 - i)]


def modal_basis(n: int, r, s) -> np.ndarray:
    """Orthonormal basis values, shape ``(npoints, np)``."""
    a, b = _rs_to_ab(r, s)
    cols = []
    for i, j in _mode_indices(n):
        h1 = jacobi_p(a, 0, 0, i)
        h2 = jacobi_p(b, 2 * i + 1, 0, j)
        cols.append(np.sqrt(2.0) * h1 * h2 * (1.0 - b) ** i)
    return np.stack(cols, axis=-1)


def modal_basis_grad(n: int, r, s) -> tuple[np.ndarray, np.ndarray]:
    a, b = _rs_to_ab(r, s)
    dr_cols, ds_cols = [], []
    for i, j in _mode_indices(n):
        fa = jacobi_p(a, 0, 0, i)
        dfa = grad_jacobi_p(a, 0, 0, i)
        gb = jacobi_p(b, 2 * i + 1, 0, j)
        dgb = grad_jacobi_p(b, 2 * i + 1, 0, j)
        half = 0.5 * (1.0 - b)
        dr = dfa * gb
        ds = dfa * (gb * 0.5 * (1.0 + a))
        if i > 0:
            dr = dr * half ** (i - 1)
            ds = ds * half ** (i - 1)
        tmp = dgb * half ** i
        if i > 0:
            tmp = tmp - 0.5 * i * gb * half ** (i - 1)
        ds = ds + fa * tmp
        scale = 2.0 ** (i + 0.5)
        dr_cols.append(scale * dr)
        ds_cols.append(scale * ds)
    return np.stack(dr_cols, axis=-1), np.stack(ds_cols, axis=-1)


def _warp_factor(n: int, rout: np.ndarray) -> np.ndarray:
    lgl = jacobi_gauss_lobatto(n)
    req = np.linspace(-1.0, 1.0, n + 1)
    veq = np.stack([jacobi_p(req, 0, 0, k) for k in range(n + 1)], axis=1)
    pmat = np.stack([jacobi_p(rout, 0, 0, k) for k in range(n + 1)], axis=0)
    lmat = np.linalg.solve(veq.T, pmat)
    warp = lmat.T @ (lgl - req)
    zerof = np.abs(rout) < 1.0 - 1e-10
    sf = 1.0 - (zerof * rout) ** 2
    return warp / sf + warp * (zerof - 1.0)


def warp_blend_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Warp-and-blend nodes on the reference triangle."""
    alpha = _ALPHA_OPT[n - 1] if n < 16 else 5.0 / 3.0
    l1, l3 = [], []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            l1.append(i / n)
            l3.append(j / n)
    l1 = np.array(l1)
    l3 = np.array(l3)
    l2 = 1.0 - l1 - l3
    x = -l2 + l3
    y = (-l2 - l3 + 2.0 * l1) / np.sqrt(3.0)

    b1, b2, b3 = 4 * l2 * l3, 4 * l1 * l3, 4 * l1 * l2
    w1 = b1 * _warp_factor(n, l3 - l2) * (1 + (alpha * l1) ** 2)
    w2 = b2 * _warp_factor(n, l1 - l3) * (1 + (alpha * l2) ** 2)
    w3 = b3 * _warp_factor(n, l2 - l1) * (1 + (alpha * l3) ** 2)
    x = x + w1 + np.cos(2 * np.pi / 3) * w2 + np.cos(4 * np.pi / 3) * w3
    y = y + np.sin(2 * np.pi / 3) * w2 + np.sin(4 * np.pi / 3) * w3

    # equilateral -> reference right triangle
    m1 = (np.sqrt(3.0) * y + 1.0) / 3.0
    m2 = (-3.0 * x - np.sqrt(3.0) * y + 2.0) / 6.0
    m3 = (3.0 * x - np.sqrt(3.0) * y + 2.0) / 6.0
    return -m2 + m3 - m1, -m2 - m3 + m1


def triangle_quadrature(strength: int):
    """Collapsed-coordinate Gauss rule exact for total degree ``strength``.

    Returns ``(r, s, w)``; all weights are positive and sum to 2.
    """
    q = max(1, (strength + 2) // 2)
    ga = legendre_gauss(q)
    b, wb = roots_jacobi(q, 1.0, 0.0)
    aa, bb = np.meshgrid(ga.nodes, b)
    wa, wbb = np.meshgrid(ga.weights, wb)
    r = 0.5 * (1.0 + aa) * (1.0 - bb) - 1.0
    return r.ravel(), bb.ravel(), 0.5 * (wa * wbb).ravel()


def face_points(face: int, t) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    if face == 0:
        return t, -np.ones_like(t)
    if face == 1:
        return -t, t.copy()
    if face == 2:
        return -np.ones_like(t), -t
    raise ValueError(f"invalid simplex face index {face}")


def face_breakpoints(face: int) -> np.ndarray:
    face_points(face, 0.0)
    return np.array([-1.0, 1.0])


class SimplexOps:
    """Nodal operators of order ``n``.

    ``Vq`` interpolates nodal values to the volume quadrature nodes, ``Drq`` and
    ``Dsq`` evaluate derivatives there, ``W`` holds the weights and
    ``M = Vq^T W Vq`` the reference mass.
    """

    def __init__(self, n: int, quad_strength: int | None = None):
        if not 1 <= n <= MAX_ORDER:
            raise ValueError(f"simplex order must be in 1..{MAX_ORDER}, got {n}")
        if quad_strength is None:
            quad_strength = 2 * n + 2
        if quad_strength < 2 * n + 2:
            raise ValueError(
                f"quadrature strength must be >= 2n+2={2 * n + 2}, got {quad_strength}")
        self.n = n
        self.np = (n + 1) * (n + 2) // 2
        self.r, self.s = warp_blend_nodes(n)
        self.V = modal_basis(n, self.r, self.s)
        cond = np.linalg.cond(self.V)
        if cond > 1e8:
            warnings.warn(f"simplex Vandermonde condition number {cond:.3e}")
        self.Vinv = np.linalg.inv(self.V)

        self.rq, self.sq, self.W = triangle_quadrature(quad_strength)
        self.quad_strength = quad_strength
        self.Vq = modal_basis(n, self.rq, self.sq) @ self.Vinv
        vr, vs = modal_basis_grad(n, self.rq, self.sq)
        self.Drq = vr @ self.Vinv
        self.Dsq = vs @ self.Vinv
        self.M = self.Vq.T @ (self.W[:, None] * self.Vq)
        self._chol = sla.cho_factor(self.M)

    @property
    def ndof(self) -> int:
        return self.np

    @property
    def nq(self) -> int:
        return len(self.W)

    def eval_matrix(self, r, s) -> np.ndarray:
        return modal_basis(self.n, np.atleast_1d(r), np.atleast_1d(s)) @ self.Vinv

    def solve_mass(self, b: np.ndarray) -> np.ndarray:
        """``M^{-1} b`` along the first axis."""
        return sla.cho_solve(self._chol, b, check_finite=False)

    # uniform element interface shared with the GD tensor operators
    @property
    def W2(self) -> np.ndarray:
        return self.W

    def interp(self, u):
        return self.Vq @ u

    def interp_T(self, q):
        return self.Vq.T @ q

    def dr(self, u):
        return self.Drq @ u

    def dr_T(self, q):
        return self.Drq.T @ q

    def ds(self, u):
        return self.Dsq @ u

    def ds_T(self, q):
        return self.Dsq.T @ q

    def mass(self, u):
        return self.M @ u

    def mass_inv(self, u):
        return self.solve_mass(u)

    def project(self, fq: np.ndarray) -> np.ndarray:
        """Unweighted L2 projection of quadrature-node values."""
        return self.solve_mass(self.Vq.T @ (self.W * fq))

    def face_trace(self, face: int, targets) -> np.ndarray:
        r, s = face_points(face, targets)
        return self.eval_matrix(r, s)


_CACHE: dict[tuple[int, int], SimplexOps] = {}


def build_simplex_ops(n: int, quad_strength: int | None = None) -> SimplexOps:
    """Shared, cached reference operators."""
    key = (n, quad_strength if quad_strength is not None else 2 * n + 2)
    if key not in _CACHE:
        _CACHE[key] = SimplexOps(n, quad_strength)
    return _CACHE[key]


def simplex_face_trace(ops: SimplexOps, face: int, targets) -> np.ndarray:
    return ops.face_trace(face, targets)
