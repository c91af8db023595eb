"""Mass operators: exact J-weighted, weight-adjusted (WADG), and inexact WADG.

All kinds share one contract: ``apply`` is the forward mass operator and
``apply_inverse`` its inverse.  For the WADG kinds the forward operator is
``M M_{1/J}^{-1} M`` and the inverse ``M^{-1} M_{1/J} M^{-1}``, which needs only
reference-mass solves and quadrature-weighted products.
"""

from __future__ import annotations

import enum
import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from gdwave.gdtensor import GdElemOps


class MassKind(str, enum.Enum):
    EXACT = "exact"
    WADG = "wadg"
    WADG_INEXACT = "wadg_inexact"


def _sparse_banded_cholesky(a: sp.spmatrix):
    a = a.tocsr()
    coo = a.tocoo()
    u = int(np.max(np.abs(coo.row - coo.col))) if coo.nnz else 0
    n = a.shape[0]
    ab = np.zeros((u + 1, n))
    for d in range(u + 1):
        ab[u - d, d:] = a.diagonal(d)
    return sla.cholesky_banded(ab, check_finite=False)


class MassOperator:
    """Mass operator of a single element.

    ``Jq`` is the Jacobian at the volume quadrature nodes: the analytic one for
    ``WADG``/``EXACT`` or the metric-derived one for ``WADG_INEXACT``.
    """

    def __init__(self, ops, Jq: np.ndarray, kind: MassKind = MassKind.WADG_INEXACT):
        self.ops = ops
        self.kind = MassKind(kind)
        self.Jq = np.asarray(Jq, dtype=float)
        if np.min(self.Jq) <= 0:
            raise ValueError(
                f"nonpositive Jacobian {np.min(self.Jq):.3e} in mass operator")
        self.Jinvq = 1.0 / self.Jq
        self._gd = isinstance(ops, GdElemOps)
        self._fac = None
        # for constant J every kind reduces to a scaled reference mass
        jmax = float(np.max(self.Jq))
        self.Jconst = jmax if np.ptp(self.Jq) <= 1e-14 * jmax else None
        if self.kind is MassKind.EXACT and not self._gd:
            self._fac = sla.cho_factor(self._dense_weighted(self.Jq))

    def _dense_weighted(self, wq):
        V = self.ops.Vq
        return V.T @ ((self.ops.W * wq)[:, None] * V)

    def _weighted_apply(self, wq, u):
        L = self.ops
        return L.interp_T(L.W2 * wq * L.interp(u))

    def _factor(self):
        if self._fac is None:
            wq = self.Jq if self.kind is MassKind.EXACT else self.Jinvq
            if self._gd:
                self._fac = ("band", _sparse_banded_cholesky(self.ops.weighted_mass(wq)))
            else:
                self._fac = sla.cho_factor(self._dense_weighted(wq))
        return self._fac

    def _solve(self, b):
        fac = self._factor()
        if self._gd:
            return sla.cho_solve_banded((fac[1], False), b, check_finite=False)
        return sla.cho_solve(fac, b, check_finite=False)

    def apply(self, u):
        if self.Jconst is not None:
            return self.Jconst * self.ops.mass(u)
        if self.kind is MassKind.EXACT:
            return self._weighted_apply(self.Jq, u)
        return self.ops.mass(self._solve(self.ops.mass(u)))

    def apply_inverse(self, u):
        if self.Jconst is not None:
            return self.ops.mass_inv(u) / self.Jconst
        if self.kind is MassKind.EXACT:
            return self._solve(u)
        m = self.ops.mass_inv
        return m(self._weighted_apply(self.Jinvq, m(u)))

    def ones_functional(self):
        """``c`` with ``c^T u = 1^T (forward mass) u``."""
        return self.apply(np.ones(self.ops.ndof))


class SimplexMassBatch:
    """Mass operators of ``K`` same-order simplices; data shaped ``(K, np)``."""

    def __init__(self, ops, Jq: np.ndarray, kind: MassKind = MassKind.WADG_INEXACT):
        self.ops = ops
        self.kind = MassKind(kind)
        self.Jq = np.atleast_2d(np.asarray(Jq, dtype=float))
        if np.min(self.Jq) <= 0:
            raise ValueError(
                f"nonpositive Jacobian {np.min(self.Jq):.3e} in simplex mass batch")
        self.Jinvq = 1.0 / self.Jq
        V, W = ops.Vq, ops.W
        self.Minv = np.linalg.inv(ops.M)
        # per-element forward and inverse matrices; np is small
        wq = self.Jq if self.kind is MassKind.EXACT else self.Jinvq
        mw = np.einsum("qi,kq,qj->kij", V, W[None, :] * wq, V)
        if self.kind is MassKind.EXACT:
            self.fwd = mw
            self.inv = np.linalg.inv(mw)
        else:
            M = ops.M
            self.inv = np.einsum("ij,kjl,lm->kim", self.Minv, mw, self.Minv)
            self.fwd = M[None] @ np.linalg.inv(mw) @ M[None]
        self.inv = 0.5 * (self.inv + np.transpose(self.inv, (0, 2, 1)))
        self.fwd = 0.5 * (self.fwd + np.transpose(self.fwd, (0, 2, 1)))

    def apply(self, U):
        return np.einsum("kij,kj->ki", self.fwd, U)

    def apply_inverse(self, U):
        return np.einsum("kij,kj->ki", self.inv, U)

    def apply_inverse_matrix_free(self, U):
        """Weight-adjusted inverse using only the shared reference mass."""
        if self.kind is MassKind.EXACT:
            return self.apply_inverse(U)
        V, W = self.ops.Vq, self.ops.W
        a = U @ self.Minv
        q = (a @ V.T) * (W[None, :] * self.Jinvq)
        return (q @ V) @ self.Minv

    def ones_functional(self):
        return self.apply(np.ones((self.Jq.shape[0], self.ops.np)))


def build_mass_operator(ops, Jq, kind=MassKind.WADG_INEXACT) -> MassOperator:
    try:
        return MassOperator(ops, Jq, kind)
    except np.linalg.LinAlgError:
        warnings.warn("weighted mass not SPD; falling back to exact J-weighted mass")
        return MassOperator(ops, Jq, MassKind.EXACT)
