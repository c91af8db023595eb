"""Coordinate maps, projected metric terms, and interface geometry repair.

Metric derivatives are L2 projections of derivatives of the projected
coordinates.  On GD elements the projection runs along grid lines only
(``x_r`` is projected in ``r``, ``x_s`` in ``s``), which is what keeps the
discrete divergence identity exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from gdwave.gdtensor import GdElemOps, face_name, _FACE_INFO
from gdwave.gdtensor import face_orientation
from gdwave.quadrule import (
    chebyshev2_nodes,
    clenshaw_curtis_weights,
    lagrange_diff_matrix,
    legendre_gauss,
)


class InvalidGeometryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# coordinate maps
# ---------------------------------------------------------------------------

class CoordMap:
    """Reference ``(r, s)`` -> physical ``(x, y)``.

    Subclasses provide ``__call__``; ``jacobian`` falls back to fourth-order
    central differences when no analytic derivative is coded.
    """

    kind = "generic"
    fd_step = 1e-3

    def __call__(self, r, s):
        raise NotImplementedError

    def jacobian(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        h = self.fd_step

        def d(fp2, fp1, fm1, fm2):
            return (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h)

        xr2, yr2 = self(r + 2 * h, s)
        xr1, yr1 = self(r + h, s)
        xm1, ym1 = self(r - h, s)
        xm2, ym2 = self(r - 2 * h, s)
        xs2, ys2 = self(r, s + 2 * h)
        xs1, ys1 = self(r, s + h)
        xsm1, ysm1 = self(r, s - h)
        xsm2, ysm2 = self(r, s - 2 * h)
        return (d(xr2, xr1, xm1, xm2), d(xs2, xs1, xsm1, xsm2),
                d(yr2, yr1, ym1, ym2), d(ys2, ys1, ysm1, ysm2))

    def det(self, r, s):
        xr, xs, yr, ys = self.jacobian(r, s)
        return xr * ys - xs * yr


@dataclass
class AffineMap(CoordMap):
    """``(x, y) = A (r, s) + b``."""

    A: np.ndarray
    b: np.ndarray
    kind = "affine"

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float).reshape(2, 2)
        self.b = np.asarray(self.b, dtype=float).reshape(2)

    @classmethod
    def from_triangle(cls, v0, v1, v2) -> "AffineMap":
        """Map of the reference triangle onto vertices ``v0, v1, v2``."""
        v0, v1, v2 = (np.asarray(v, dtype=float) for v in (v0, v1, v2))
        A = 0.5 * np.column_stack((v1 - v0, v2 - v0))
        return cls(A, 0.5 * (v1 + v2))

    @classmethod
    def from_box(cls, x0, x1, y0, y1) -> "AffineMap":
        A = np.diag([0.5 * (x1 - x0), 0.5 * (y1 - y0)])
        return cls(A, [0.5 * (x0 + x1), 0.5 * (y0 + y1)])

    def __call__(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        return (self.A[0, 0] * r + self.A[0, 1] * s + self.b[0],
                self.A[1, 0] * r + self.A[1, 1] * s + self.b[1])

    def jacobian(self, r, s):
        one = np.ones_like(np.asarray(r, dtype=float))
        return (self.A[0, 0] * one, self.A[0, 1] * one,
                self.A[1, 0] * one, self.A[1, 1] * one)


@dataclass
class BilinearMap(CoordMap):
    """Bilinear quadrilateral; corners ordered (-1,-1), (1,-1), (1,1), (-1,1)."""

    corners: np.ndarray
    kind = "bilinear"

    def __post_init__(self):
        self.corners = np.asarray(self.corners, dtype=float).reshape(4, 2)

    def _shape(self, r, s):
        return (0.25 * (1 - r) * (1 - s), 0.25 * (1 + r) * (1 - s),
                0.25 * (1 + r) * (1 + s), 0.25 * (1 - r) * (1 + s))

    def __call__(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        n = self._shape(r, s)
        x = sum(n[k] * self.corners[k, 0] for k in range(4))
        y = sum(n[k] * self.corners[k, 1] for k in range(4))
        return x, y

    def jacobian(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        dr = (-0.25 * (1 - s), 0.25 * (1 - s), 0.25 * (1 + s), -0.25 * (1 + s))
        ds = (-0.25 * (1 - r), -0.25 * (1 + r), 0.25 * (1 + r), 0.25 * (1 - r))
        c = self.corners
        return (sum(dr[k] * c[k, 0] for k in range(4)),
                sum(ds[k] * c[k, 0] for k in range(4)),
                sum(dr[k] * c[k, 1] for k in range(4)),
                sum(ds[k] * c[k, 1] for k in range(4)))


class SkewBoxMap(CoordMap):
    """Rotation by ``beta = pi/4 (1-r^2)(1-s^2)``; identity on the boundary."""

    kind = "skewbox"

    def __call__(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        b = 0.25 * np.pi * (1 - r * r) * (1 - s * s)
        c, sn = np.cos(b), np.sin(b)
        return r * c + s * sn, -r * sn + s * c

    def jacobian(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        b = 0.25 * np.pi * (1 - r * r) * (1 - s * s)
        br = -0.5 * np.pi * r * (1 - s * s)
        bs = -0.5 * np.pi * s * (1 - r * r)
        c, sn = np.cos(b), np.sin(b)
        # d/db of (x, y) = (-r sin + s cos, -r cos - s sin)
        gx = -r * sn + s * c
        gy = -r * c - s * sn
        return c + gx * br, sn + gx * bs, -sn + gy * br, c + gy * bs


@dataclass
class ProjTestMap(CoordMap):
    """``x = r + beta cos(3 pi s / 2) cos(pi r / 2)``,
    ``y = s + beta sin(3 pi r / 2) cos(pi s / 2)``."""

    beta: float
    kind = "projtest"

    def __call__(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        b = self.beta
        return (r + b * np.cos(1.5 * np.pi * s) * np.cos(0.5 * np.pi * r),
                s + b * np.sin(1.5 * np.pi * r) * np.cos(0.5 * np.pi * s))

    def jacobian(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        b, p = self.beta, np.pi
        xr = 1 - b * np.cos(1.5 * p * s) * 0.5 * p * np.sin(0.5 * p * r)
        xs = -b * 1.5 * p * np.sin(1.5 * p * s) * np.cos(0.5 * p * r)
        yr = b * 1.5 * p * np.cos(1.5 * p * r) * np.cos(0.5 * p * s)
        ys = 1 - b * np.sin(1.5 * p * r) * 0.5 * p * np.sin(0.5 * p * s)
        return xr, xs, yr, ys


@dataclass
class CompositeMap(CoordMap):
    """``outer(inner(r, s))``."""

    outer: CoordMap
    inner: CoordMap
    kind = "composite"

    def __call__(self, r, s):
        return self.outer(*self.inner(r, s))

    def jacobian(self, r, s):
        u, v = self.inner(r, s)
        ar, as_, br, bs = self.inner.jacobian(r, s)
        xu, xv, yu, yv = self.outer.jacobian(u, v)
        return (xu * ar + xv * br, xu * as_ + xv * bs,
                yu * ar + yv * br, yu * as_ + yv * bs)


@dataclass
class Shifted(CoordMap):
    """A map translated by a constant vector."""

    base: CoordMap
    shift: tuple[float, float]
    kind = "shifted"

    def __call__(self, r, s):
        x, y = self.base(r, s)
        return x + self.shift[0], y + self.shift[1]

    def jacobian(self, r, s):
        return self.base.jacobian(r, s)


# edge curves for transfinite blending; parameter t in [-1, 1]

@dataclass
class LineEdge:
    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float)
        self.p1 = np.asarray(self.p1, dtype=float)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        u = 0.5 * (1 + t)
        return (self.p0[0] + u * (self.p1[0] - self.p0[0]),
                self.p0[1] + u * (self.p1[1] - self.p0[1]))

    def deriv(self, t):
        one = np.ones_like(np.asarray(t, dtype=float))
        return 0.5 * (self.p1[0] - self.p0[0]) * one, 0.5 * (self.p1[1] - self.p0[1]) * one


@dataclass
class ArcEdge:
    """Circular arc from angle ``theta0`` to ``theta1``."""

    center: tuple[float, float]
    radius: float
    theta0: float
    theta1: float

    def _theta(self, t):
        return self.theta0 + 0.5 * (1 + np.asarray(t, dtype=float)) * (self.theta1 - self.theta0)

    def __call__(self, t):
        th = self._theta(t)
        return (self.center[0] + self.radius * np.cos(th),
                self.center[1] + self.radius * np.sin(th))

    def deriv(self, t):
        th = self._theta(t)
        dth = 0.5 * (self.theta1 - self.theta0)
        return -self.radius * np.sin(th) * dth, self.radius * np.cos(th) * dth


@dataclass
class TransfiniteMap(CoordMap):
    """Gordon-Hall blending of four edge curves.

    ``edges = (bottom(r), right(s), top(r), left(s))``, each parameterized in
    the increasing reference coordinate.
    """

    edges: tuple
    kind = "diskblend"

    def __call__(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        bot, rgt, top, lft = self.edges
        c00, c10 = np.array(bot(-1.0)), np.array(bot(1.0))
        c01, c11 = np.array(top(-1.0)), np.array(top(1.0))
        out = []
        for k in range(2):
            v = (0.5 * (1 - s) * bot(r)[k] + 0.5 * (1 + s) * top(r)[k]
                 + 0.5 * (1 - r) * lft(s)[k] + 0.5 * (1 + r) * rgt(s)[k]
                 - 0.25 * ((1 - r) * (1 - s) * c00[k] + (1 + r) * (1 - s) * c10[k]
                           + (1 + r) * (1 + s) * c11[k] + (1 - r) * (1 + s) * c01[k]))
            out.append(v)
        return out[0], out[1]

    def jacobian(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        bot, rgt, top, lft = self.edges
        c00, c10 = np.array(bot(-1.0)), np.array(bot(1.0))
        c01, c11 = np.array(top(-1.0)), np.array(top(1.0))
        res = []
        for k in range(2):
            dr = (0.5 * (1 - s) * bot.deriv(r)[k] + 0.5 * (1 + s) * top.deriv(r)[k]
                  - 0.5 * lft(s)[k] + 0.5 * rgt(s)[k]
                  - 0.25 * (-(1 - s) * c00[k] + (1 - s) * c10[k]
                            + (1 + s) * c11[k] - (1 + s) * c01[k]))
            ds = (-0.5 * bot(r)[k] + 0.5 * top(r)[k]
                  + 0.5 * (1 - r) * lft.deriv(s)[k] + 0.5 * (1 + r) * rgt.deriv(s)[k]
                  - 0.25 * (-(1 - r) * c00[k] - (1 + r) * c10[k]
                            + (1 + r) * c11[k] + (1 - r) * c01[k]))
            res.append((dr, ds))
        return res[0][0], res[0][1], res[1][0], res[1][1]


@dataclass
class CurvedTriangleMap(CoordMap):
    """Triangle with face ``face`` replaced by a circular arc.

    ``x = affine(lambda) + (la + lb)^2 d(u)`` with ``u = lb / (la + lb)``
    along the curved face and ``d`` the arc-minus-chord displacement.  The
    other two faces stay straight and affinely parameterized.
    """

    vertices: np.ndarray
    face: int
    center: tuple[float, float]
    radius: float
    kind = "curvedtriangle"

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(3, 2)
        self._affine = AffineMap.from_triangle(*self.vertices)
        a, b = self.face, (self.face + 1) % 3
        c = np.asarray(self.center, dtype=float)
        self._ia, self._ib = a, b
        pa, pb = self.vertices[a] - c, self.vertices[b] - c
        self._th0 = np.arctan2(pa[1], pa[0])
        th1 = np.arctan2(pb[1], pb[0])
        # shortest signed sweep
        d = (th1 - self._th0 + np.pi) % (2 * np.pi) - np.pi
        self._dth = d

    def _disp(self, u):
        th = self._th0 + u * self._dth
        c = np.asarray(self.center)
        arc = (c[0] + self.radius * np.cos(th), c[1] + self.radius * np.sin(th))
        va, vb = self.vertices[self._ia], self.vertices[self._ib]
        return (arc[0] - (va[0] + u * (vb[0] - va[0])),
                arc[1] - (va[1] + u * (vb[1] - va[1])))

    def __call__(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        lam = (-(r + s) / 2, (1 + r) / 2, (1 + s) / 2)
        x, y = self._affine(r, s)
        la, lb = lam[self._ia], lam[self._ib]
        tot = la + lb
        safe = np.where(np.abs(tot) > 1e-14, tot, 1.0)
        u = np.clip(lb / safe, 0.0, 1.0)
        dx, dy = self._disp(u)
        w = np.where(np.abs(tot) > 1e-14, tot * tot, 0.0)
        return x + w * dx, y + w * dy

    fd_step = 1e-4


# ---------------------------------------------------------------------------
# element geometry
# ---------------------------------------------------------------------------

class JacMode(str, enum.Enum):
    FROM_METRIC = "metric"
    SQRTJ = "sqrtj"


@dataclass
class ElemGeometry:
    """Coordinate and metric data of one element.

    DOF-space data (``xdof``.. ``ys``) is always kept; the quadrature-node
    diagonals are kept only when ``store_quadrature`` is set, otherwise
    :meth:`factors` rebuilds them on demand.
    """

    ops: object
    xdof: np.ndarray
    ydof: np.ndarray
    xr: np.ndarray
    xs: np.ndarray
    yr: np.ndarray
    ys: np.ndarray
    Jq: np.ndarray
    jac_mode: JacMode = JacMode.FROM_METRIC
    store_quadrature: bool = True
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def Jinvq(self):
        return 1.0 / self.Jq

    @property
    def valid(self) -> bool:
        return bool(np.min(self.Jq) > 0)

    def check(self):
        if not self.valid:
            k = int(np.argmin(self.Jq))
            raise InvalidGeometryError(
                f"nonpositive Jacobian {self.Jq[k]:.3e} at reference point "
                f"({self.ops.rq[k]:.4f}, {self.ops.sq[k]:.4f})")

    def factors(self):
        """``(JrX, JrY, JsX, JsY)`` at the quadrature nodes."""
        if "f" in self._cache:
            return self._cache["f"]
        L = self.ops.interp
        f = (L(self.ys), -L(self.xs), -L(self.yr), L(self.xr))
        if self.store_quadrature:
            self._cache["f"] = f
        return f

    def physical_quad_points(self):
        return self.ops.interp(self.xdof), self.ops.interp(self.ydof)


def _line_projectors(elem: GdElemOps):
    """``Mr^{-1} Lr^T Wr Dr`` and the ``s`` analogue as dense matrices."""
    cache = elem.__dict__.setdefault("_line_proj", {})
    if not cache:
        for key, o in (("r", elem.ops_r), ("s", elem.ops_s)):
            cache[key] = o.solve_mass(o.LT @ (o.W[:, None] * o.D.toarray()))
    return cache["r"], cache["s"]


def project_coordinates(ops, cmap: CoordMap):
    """``M^{-1} L^T W x(r_q, s_q)`` for both coordinates."""
    xq, yq = cmap(ops.rq, ops.sq)
    return ops.project(xq), ops.project(yq)


def interpolate_coordinates(ops, cmap: CoordMap):
    """Nodal interpolation of the map (simplex isoparametric coordinates)."""
    return cmap(ops.r, ops.s)


def metric_derivatives(ops, xdof, ydof):
    """Projected ``x_r, x_s, y_r, y_s`` DOF vectors."""
    if isinstance(ops, GdElemOps):
        pr, ps = _line_projectors(ops)
        out = []
        for u in (xdof, ydof):
            u2 = u.reshape(ops.shape)
            out.append((u2 @ pr.T).ravel())
            out.append((ps @ u2).ravel())
        xr, xs, yr, ys = out
        return xr, xs, yr, ys
    return (ops.project(ops.dr(xdof)), ops.project(ops.ds(xdof)),
            ops.project(ops.dr(ydof)), ops.project(ops.ds(ydof)))


def build_metric_terms(ops, xdof, ydof, store_quadrature: bool = True,
                       jac_mode: JacMode = JacMode.FROM_METRIC) -> ElemGeometry:
    xr, xs, yr, ys = metric_derivatives(ops, xdof, ydof)
    L = ops.interp
    if JacMode(jac_mode) is JacMode.SQRTJ:
        Jq = build_sqrtj_storage(ops, xdof, ydof)
    else:
        Jq = L(xr) * L(ys) - L(xs) * L(yr)
    geo = ElemGeometry(ops, np.asarray(xdof, dtype=float), np.asarray(ydof, dtype=float),
                       xr, xs, yr, ys, Jq, JacMode(jac_mode), store_quadrature)
    return geo


def build_sqrtj_storage(ops, xdof, ydof) -> np.ndarray:
    """Jacobian stored through its projected square root, squared back."""
    jt = ops.dr(xdof) * ops.ds(ydof) - ops.ds(xdof) * ops.dr(ydof)
    if np.min(jt) < 0:
        raise InvalidGeometryError(
            f"negative pointwise Jacobian {np.min(jt):.3e} before square root")
    jsq = ops.project(np.sqrt(jt))
    return ops.interp(jsq) ** 2


def exact_jacobian(ops, cmap: CoordMap) -> np.ndarray:
    return cmap.det(ops.rq, ops.sq)


def volume_divergence(ops: GdElemOps, geo: ElemGeometry, vx, vy) -> float:
    """``1^T Sx vx + 1^T Sy vy`` with the stored metric factors."""
    jrx, jry, jsx, jsy = geo.factors()
    dvx_r, dvx_s = ops.dr(vx), ops.ds(vx)
    dvy_r, dvy_s = ops.dr(vy), ops.ds(vy)
    return float(np.sum(ops.W2 * (jrx * dvx_r + jsx * dvx_s + jry * dvy_r + jsy * dvy_s)))


def boundary_normal_flux(ops: GdElemOps, xdof, ydof, vx, vy) -> float:
    """``int S_J (n_x v_x + n_y v_y)`` over the element boundary.

    Normals and surface Jacobians come from the traces of the coordinate
    functions; each face subcell uses an ``n+1`` point Gauss rule, exact for
    the piecewise polynomial integrand.
    """
    q = legendre_gauss(ops.n + 1)
    d = lagrange_diff_matrix(q.nodes)
    total = 0.0
    for face in range(4):
        b = ops.face_breakpoints(face)
        lo, hi = b[:-1, None], b[1:, None]
        t = (lo + 0.5 * (hi - lo) * (q.nodes + 1.0)).ravel()
        tr = ops.face_trace(face, t)
        shape = (len(b) - 1, len(q.nodes))
        x, y = tr(xdof).reshape(shape), tr(ydof).reshape(shape)
        # d/dt on each subcell, times dt = (hi - lo)/2 du
        xu, yu = x @ d.T, y @ d.T
        flux = yu * tr(vx).reshape(shape) - xu * tr(vy).reshape(shape)
        total += face_orientation(face) * float(np.sum(flux @ q.weights))
    return total


# ---------------------------------------------------------------------------
# watertight interface repair
# ---------------------------------------------------------------------------

def corner_constrained_fit(t, f, w, n, f_left, f_right):
    """Degree-``n`` discrete least squares fit on ``[-1, 1]`` with pinned ends.

    Minimizes ``sum w (p(t) - f)^2`` subject to ``p(-1) = f_left`` and
    ``p(1) = f_right``; returns Legendre coefficients.
    """
    V = np.polynomial.legendre.legvander(t, n)
    e = np.polynomial.legendre.legvander(np.array([-1.0, 1.0]), n)
    A = V.T @ (w[:, None] * V)
    kkt = np.zeros((n + 3, n + 3))
    kkt[: n + 1, : n + 1] = A
    kkt[: n + 1, n + 1:] = e.T
    kkt[n + 1:, : n + 1] = e
    rhs = np.concatenate((V.T @ (w * f), [f_left, f_right]))
    return np.linalg.solve(kkt, rhs)[: n + 1]


@dataclass
class InterfaceCurve:
    """Shared degree-``n`` polynomial curve over interface parameter [-1, 1]."""

    cx: np.ndarray
    cy: np.ndarray

    def __call__(self, t):
        leg = np.polynomial.legendre.legval
        return leg(t, self.cx), leg(t, self.cy)


def fit_interface_curve(curve_fn, n: int, npoints: int = 21) -> InterfaceCurve:
    """Corner-preserving projection of a parameterized curve into P_n.

    ``curve_fn(t) -> (x, y)`` for ``t`` in ``[-1, 1]``; sampled on Chebyshev
    points of the second kind with Clenshaw-Curtis weights.
    """
    t = chebyshev2_nodes(npoints)
    w = clenshaw_curtis_weights(npoints)
    x, y = curve_fn(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return InterfaceCurve(corner_constrained_fit(t, x, w, n, x[0], x[-1]),
                          corner_constrained_fit(t, y, w, n, y[0], y[-1]))


def face_column_index(elem: GdElemOps, face) -> tuple[np.ndarray, np.ndarray]:
    """Flat indices of the DOFs sitting on a face and their face parameters.

    The face parameter runs along the increasing tangential reference
    coordinate and includes ghost points outside [-1, 1].
    """
    direction, coord, _ = _FACE_INFO[face_name(face)]
    ns, nr = elem.shape
    if direction == "r":
        pr = elem.ops_r.params
        lo = pr.stored_range[0]
        j = (0 if coord < 0 else pr.nsub) - lo
        idx = np.arange(ns) * nr + j
        t = elem.ops_s.nodes
    else:
        ps = elem.ops_s.params
        lo = ps.stored_range[0]
        i = (0 if coord < 0 else ps.nsub) - lo
        idx = i * nr + np.arange(nr)
        t = elem.ops_r.nodes
    return idx, t


def set_face_coordinates(elem: GdElemOps, xdof, ydof, face, curve_fn):
    """Overwrite face DOFs with samples of ``curve_fn`` at face grid nodes."""
    idx, t = face_column_index(elem, face)
    x, y = curve_fn(t)
    xdof = xdof.copy()
    ydof = ydof.copy()
    xdof[idx] = x
    ydof[idx] = y
    return xdof, ydof
