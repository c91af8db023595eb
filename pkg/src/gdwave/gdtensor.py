"""Tensor-product GD element operators on ``[-1, 1]^2``.

DOFs are stored as a ``(ns, nr)`` grid flattened with ``r`` fastest, so
``u = (phi_s ⊗ phi_r)^T u``.  Quadrature data use the same layout over the
composite quadrature grid.  All Kronecker operators are applied in factored
form; nothing of size ``ndof x ndof`` is ever formed here.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from gdwave.gd1d import GdOps1d

# face tag -> (normal direction, boundary coordinate, sign making the
# increasing-coordinate face parameter counterclockwise)
FACES = ("s-", "r+", "s+", "r-")
_FACE_INFO = {
    "s-": ("s", -1.0, 1.0),
    "r+": ("r", 1.0, 1.0),
    "s+": ("s", 1.0, -1.0),
    "r-": ("r", -1.0, -1.0),
}


def face_name(face) -> str:
    if isinstance(face, (int, np.integer)):
        if not 0 <= face < 4:
            raise ValueError(f"invalid GD face index {face}")
        return FACES[face]
    if face not in _FACE_INFO:
        raise ValueError(f"invalid GD face tag {face!r}")
    return face


def face_orientation(face) -> float:
    return _FACE_INFO[face_name(face)][2]


def face_points(face, t) -> tuple[np.ndarray, np.ndarray]:
    """Reference coordinates of face parameter values ``t``."""
    direction, coord, _ = _FACE_INFO[face_name(face)]
    t = np.asarray(t, dtype=float)
    c = np.full_like(t, coord)
    return (c, t) if direction == "r" else (t, c)


def _apply2(a_s, a_r, u2: np.ndarray) -> np.ndarray:
    """``(a_s ⊗ a_r) u`` for ``u`` shaped ``(ns, nr)``."""
    return a_s @ (a_r @ u2.T).T


class FaceTrace:
    """Element DOFs -> values at points along one face.

    Factored as (1D interpolation along the face) ⊗ (boundary evaluation row
    in the normal direction).
    """

    def __init__(self, elem: "GdElemOps", face, targets):
        self.face = face_name(face)
        self.elem = elem
        self.targets = np.asarray(targets, dtype=float)
        direction, coord, _ = _FACE_INFO[self.face]
        if direction == "r":
            self.along = elem.ops_s.eval_matrix(self.targets)
            self.normal_row = elem.ops_r.eval_matrix([coord]).toarray()[0]
        else:
            self.along = elem.ops_r.eval_matrix(self.targets)
            self.normal_row = elem.ops_s.eval_matrix([coord]).toarray()[0]
        self.alongT = self.along.T.tocsr()
        self.direction = direction

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u2 = u.reshape(self.elem.shape)
        if self.direction == "r":
            return self.along @ (u2 @ self.normal_row)
        return self.along @ (self.normal_row @ u2)

    def transpose(self, q: np.ndarray) -> np.ndarray:
        a = self.alongT @ q
        if self.direction == "r":
            return np.outer(a, self.normal_row).ravel()
        return np.outer(self.normal_row, a).ravel()

    def matrix(self) -> np.ndarray:
        along = self.along.toarray()
        if self.direction == "r":
            return np.kron(along, self.normal_row[None, :])
        return np.kron(self.normal_row[None, :], along)


class GdElemOps:
    """Reference operators of a 2D GD element.

    Attributes mirror the 1D bundle: ``W2`` are the tensor weights, and the
    methods ``interp``, ``dr``, ``ds`` (and ``*_T`` transposes) apply
    ``L = Ls ⊗ Lr``, ``Dr = Ls ⊗ Dr``, ``Ds = Ds ⊗ Lr``.
    """

    def __init__(self, ops_r: GdOps1d, ops_s: GdOps1d):
        if ops_r.params.n != ops_s.params.n:
            raise ValueError(
                f"order mismatch: n_r={ops_r.params.n}, n_s={ops_s.params.n}")
        self.ops_r = ops_r
        self.ops_s = ops_s
        self.n = ops_r.params.n
        self.shape = (ops_s.ndof, ops_r.ndof)
        self.qshape = (ops_s.nq, ops_r.nq)
        self.ndof = ops_s.ndof * ops_r.ndof
        self.nq = ops_s.nq * ops_r.nq
        self.W2 = np.outer(ops_s.W, ops_r.W).ravel()
        rq, sq = np.meshgrid(ops_r.qnodes, ops_s.qnodes)
        self.rq = rq.ravel()
        self.sq = sq.ravel()

    # -- quadrature-node operators -------------------------------------
    def interp(self, u):
        return _apply2(self.ops_s.L, self.ops_r.L, u.reshape(self.shape)).ravel()

    def interp_T(self, q):
        return _apply2(self.ops_s.LT, self.ops_r.LT, q.reshape(self.qshape)).ravel()

    def dr(self, u):
        return _apply2(self.ops_s.L, self.ops_r.D, u.reshape(self.shape)).ravel()

    def dr_T(self, q):
        return _apply2(self.ops_s.LT, self.ops_r.DT, q.reshape(self.qshape)).ravel()

    def ds(self, u):
        return _apply2(self.ops_s.D, self.ops_r.L, u.reshape(self.shape)).ravel()

    def ds_T(self, q):
        return _apply2(self.ops_s.DT, self.ops_r.LT, q.reshape(self.qshape)).ravel()

    # -- reference mass ------------------------------------------------
    def mass(self, u):
        return (self.ops_s.M @ u.reshape(self.shape) @ self.ops_r.M.T).ravel()

    def mass_inv(self, u):
        u2 = u.reshape(self.shape)
        u2 = self.ops_s.solve_mass(u2)
        u2 = self.ops_r.solve_mass(u2.T).T
        return u2.ravel()

    def project(self, fq):
        """Unweighted L2 projection of quadrature-node values."""
        return self.mass_inv(self.interp_T(self.W2 * fq))

    def project_lines_r(self, g):
        """``(I ⊗ Mr^{-1} Lr^T Wr) g`` for quadrature-in-r, DOF-in-s data."""
        g2 = g.reshape(self.shape[0], self.qshape[1])
        out = self.ops_r.solve_mass((self.ops_r.LT @ (self.ops_r.W[:, None] * g2.T)))
        return out.T.ravel()

    # -- sparse forms for weighted mass assembly -----------------------
    def sparse_L(self) -> sp.csr_matrix:
        return sp.kron(self.ops_s.L, self.ops_r.L, format="csr")

    def weighted_mass(self, wq: np.ndarray) -> sp.csr_matrix:
        """``L^T diag(W2 * wq) L`` as a sparse matrix."""
        L = self.sparse_L()
        return (L.T @ L.multiply((self.W2 * wq)[:, None])).tocsr()

    def face_trace(self, face, targets) -> FaceTrace:
        return FaceTrace(self, face, targets)

    def grid_points(self):
        r = self.ops_r.nodes
        s = self.ops_s.nodes
        rr, ss = np.meshgrid(r, s)
        return rr.ravel(), ss.ravel()

    def face_breakpoints(self, face) -> np.ndarray:
        direction = _FACE_INFO[face_name(face)][0]
        return (self.ops_s if direction == "r" else self.ops_r).breakpoints()

    def eval_matrix(self, r, s) -> sp.csr_matrix:
        """Point evaluation at scattered reference points."""
        er = self.ops_r.eval_matrix(r)
        es = self.ops_s.eval_matrix(s)
        rows = []
        for k in range(len(np.atleast_1d(r))):
            rows.append(sp.kron(es[k], er[k]))
        return sp.vstack(rows).tocsr()


def build_gd_elem(ops_r: GdOps1d, ops_s: GdOps1d) -> GdElemOps:
    return GdElemOps(ops_r, ops_s)


def apply_mass_inverse(elem: GdElemOps, u: np.ndarray) -> np.ndarray:
    return elem.mass_inv(u)


def face_trace_operator(elem: GdElemOps, face, targets) -> FaceTrace:
    return elem.face_trace(face, targets)
