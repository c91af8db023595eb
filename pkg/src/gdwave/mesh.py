"""Meshes of GD quadrilaterals and simplices: connectivity, geometry, mortars."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from gdwave import gdtensor, simplex
from gdwave.gdtensor import GdElemOps
from gdwave.geometry import (
    CoordMap,
    ElemGeometry,
    JacMode,
    build_metric_terms,
    face_column_index,
    fit_interface_curve,
    interpolate_coordinates,
    project_coordinates,
)
from gdwave.mortar import (
    BoundaryTag,
    Interface,
    MortarElement,
    affine_param,
    build_mortar_element,
    build_mortar_partition,
    mortar_breaks_in_u,
)


class GeometryMode(str, enum.Enum):
    DISCONTINUOUS = "discontinuous"
    WATERTIGHT = "watertight"


@dataclass
class Element:
    """A GD block or a simplex bound to a coordinate map."""

    kind: str
    ops: object
    cmap: CoordMap
    xdof: np.ndarray | None = None
    ydof: np.ndarray | None = None
    geo: ElemGeometry | None = None
    curved: bool = False
    # provenance under refinement: index of the level-0 element this one
    # came from and the affine map from this reference element into it
    base: int | None = None
    ref_affine: CoordMap | None = None

    @property
    def is_gd(self) -> bool:
        return self.kind == "gd"

    @property
    def nfaces(self) -> int:
        return 4 if self.is_gd else 3

    @property
    def ndof(self) -> int:
        return self.ops.ndof

    @property
    def n(self) -> int:
        return self.ops.n

    def face_ref_points(self, face, t):
        if self.is_gd:
            return gdtensor.face_points(face, t)
        return simplex.face_points(face, t)

    def face_breakpoints(self, face) -> np.ndarray:
        if self.is_gd:
            return self.ops.face_breakpoints(face)
        return simplex.face_breakpoints(face)

    def face_sign(self, face) -> float:
        """+1 when the increasing face parameter runs counterclockwise."""
        if self.is_gd:
            return gdtensor.face_orientation(face)
        return 1.0

    def face_map(self, face, t):
        """Analytic physical points of the face."""
        return self.cmap(*self.face_ref_points(face, t))

    def trace_operator(self, face, t):
        """Callable DOFs -> values at face parameters ``t``."""
        if self.is_gd:
            return self.ops.face_trace(face, t)
        mat = self.ops.face_trace(face, t)
        return lambda u: mat @ u

    def face_coords(self, face, t):
        tr = self.trace_operator(face, t)
        return tr(self.xdof), tr(self.ydof)

    def centroid(self):
        if self.is_gd:
            return self.cmap(np.array(0.0), np.array(0.0))
        return self.cmap(np.array(-1.0 / 3.0), np.array(-1.0 / 3.0))


def gd_element(ops: GdElemOps, cmap: CoordMap) -> Element:
    return Element("gd", ops, cmap)


def simplex_element(ops, cmap: CoordMap, curved: bool = False) -> Element:
    return Element("simplex", ops, cmap, curved=curved)


@dataclass
class Mesh:
    elements: list[Element]
    interfaces: list[Interface]
    mortars: list[MortarElement]
    geometry_mode: GeometryMode
    mortar_offsets: np.ndarray = field(default_factory=lambda: np.zeros(1, int))

    @property
    def ndof(self) -> int:
        return sum(e.ndof for e in self.elements)

    @property
    def nmortar_nodes(self) -> int:
        return int(self.mortar_offsets[-1])

    def h_min(self) -> float:
        """Smallest GD grid spacing in physical units (reference h times map scale)."""
        out = np.inf
        for e in self.elements:
            if e.is_gd:
                hr = e.ops.ops_r.params.h
                hs = e.ops.ops_s.params.h
                xr, xs, yr, ys = e.cmap.jacobian(e.ops.rq, e.ops.sq)
                out = min(out, hr * np.min(np.hypot(xr, yr)), hs * np.min(np.hypot(xs, ys)))
        return float(out)

    def simplex_inradius_min(self) -> float:
        out = np.inf
        for e in self.elements:
            if not e.is_gd:
                v = np.array([e.cmap(np.array(a), np.array(b))
                              for a, b in ((-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0))])
                a = np.linalg.norm(v[1] - v[0])
                b = np.linalg.norm(v[2] - v[1])
                c = np.linalg.norm(v[0] - v[2])
                d1, d2 = v[1] - v[0], v[2] - v[0]
                area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
                out = min(out, 2 * area / (a + b + c))
        return float(out)


# ---------------------------------------------------------------------------
# connectivity
# ---------------------------------------------------------------------------

def _endpoints(e: Element, f):
    x, y = e.face_map(f, np.array([-1.0, 0.0, 1.0]))
    return np.column_stack((x, y))


def _straight(pts, tol):
    a, m, b = pts
    d = b - a
    cross = d[0] * (m - a)[1] - d[1] * (m - a)[0]
    return abs(cross) <= tol * max(1.0, np.linalg.norm(d))


def find_interfaces(elements: list[Element], periodic_shifts=(), tol: float = 1e-10
                    ) -> list[Interface]:
    """Match faces by their endpoints (and midpoints).

    Full face matches become conforming interfaces; a face whose endpoints
    lie on a longer straight face becomes a partial interface with the long
    face as the minus side; matches after a periodic shift become periodic
    interfaces; whatever is left is a wall.
    """
    allpts = np.concatenate([_endpoints(e, f) for e in elements for f in range(e.nfaces)])
    diam = float(np.max(np.ptp(allpts, axis=0)))
    atol = tol * max(1.0, diam)

    faces = [(i, f) for i, e in enumerate(elements) for f in range(e.nfaces)]
    pts = {key: _endpoints(elements[key[0]], key[1]) for key in faces}
    keyed = {}
    for key in faces:
        mid = pts[key][1]
        keyed.setdefault(tuple(np.round(mid / (100 * atol)).astype(np.int64)), []).append(key)

    def close(a, b):
        return np.linalg.norm(a - b) <= 100 * atol

    interfaces: list[Interface] = []
    used = set()

    def try_full(ka, kb, shift=np.zeros(2)):
        pa, pb = pts[ka], pts[kb] - shift
        if not close(pa[1], pb[1]):
            return None
        if close(pa[0], pb[2]) and close(pa[2], pb[0]):
            return (1.0, -1.0)
        if close(pa[0], pb[0]) and close(pa[2], pb[2]):
            return (-1.0, 1.0)
        return None

    # full matches
    for key in faces:
        if key in used:
            continue
        mid = pts[key][1]
        cands = []
        base = np.round(mid / (100 * atol)).astype(np.int64)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                cands += keyed.get((base[0] + dx, base[1] + dy), [])
        for other in cands:
            if other == key or other in used or other[0] == key[0]:
                continue
            pr = try_full(key, other)
            if pr is not None:
                a, b = sorted((key, other))
                if a != key:
                    pr = try_full(a, b)
                interfaces.append(Interface(a, b, (-1.0, 1.0), pr))
                used.update((key, other))
                break

    # partial matches: short faces lying on a longer straight face
    for long_key in faces:
        if long_key in used:
            continue
        pl = pts[long_key]
        if not _straight(pl, atol):
            continue
        a, b = pl[0], pl[2]
        d = b - a
        length2 = float(d @ d)
        pieces = []
        for key in faces:
            if key in used or key[0] == long_key[0]:
                continue
            ps = pts[key]
            ok = True
            ts = []
            for p in (ps[0], ps[2], ps[1]):
                w = p - a
                lam = float(w @ d) / length2
                perp = np.linalg.norm(w - lam * d)
                if perp > 100 * atol or lam < -1e-9 or lam > 1 + 1e-9:
                    ok = False
                    break
                ts.append(-1.0 + 2.0 * lam)
            if ok:
                pieces.append((key, ts))
        if not pieces:
            continue
        total = sum(abs(ts[1] - ts[0]) for _, ts in pieces)
        if abs(total - 2.0) > 1e-8:
            continue
        for key, ts in pieces:
            t0, t1 = ts[0], ts[1]
            if t0 < t1:
                interfaces.append(Interface(long_key, key, (t0, t1), (-1.0, 1.0)))
            else:
                interfaces.append(Interface(long_key, key, (t1, t0), (1.0, -1.0)))
            used.add(key)
        used.add(long_key)

    # periodic matches
    for shift in periodic_shifts:
        shift = np.asarray(shift, dtype=float)
        for key in faces:
            if key in used:
                continue
            for other in faces:
                if other in used or other == key:
                    continue
                pr = try_full(key, other, shift)
                if pr is not None:
                    interfaces.append(Interface(key, other, (-1.0, 1.0), pr,
                                                BoundaryTag.PERIODIC, tuple(shift)))
                    used.update((key, other))
                    break

    for key in faces:
        if key not in used:
            interfaces.append(Interface(key, None, tag=BoundaryTag.WALL))
    return interfaces


# ---------------------------------------------------------------------------
# geometry assembly
# ---------------------------------------------------------------------------

def _gd_faces_conform(ea: Element, fa, eb: Element, fb) -> bool:
    def along(e, f):
        d = gdtensor._FACE_INFO[gdtensor.face_name(f)][0]
        return (e.ops.ops_s if d == "r" else e.ops.ops_r).params

    pa, pb = along(ea, fa), along(eb, fb)
    return pa.nsub == pb.nsub and pa.m == pb.m and set(pa.closure) == set(pb.closure)


def simplex_face_nodes(ops, face) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the nodes on a simplex face and their face parameters."""
    r, s = ops.r, ops.s
    tol = 1e-10
    if face == 0:
        on, t = np.abs(s + 1) < tol, r
    elif face == 1:
        on, t = np.abs(r + s) < tol, s
    elif face == 2:
        on, t = np.abs(r + 1) < tol, -s
    else:
        raise ValueError(f"invalid simplex face index {face}")
    idx = np.flatnonzero(on)
    return idx, t[idx]


def _face_nodes(e: Element, f):
    if e.is_gd:
        return face_column_index(e.ops, f)
    return simplex_face_nodes(e.ops, f)


def repair_interfaces(elements: list[Element], interfaces: list[Interface],
                      interpolate_conforming: bool = True, npoints: int = 21):
    """Make interfaces that involve a GD face watertight.

    Nonconforming interfaces get a shared corner-preserving degree-``n``
    polynomial; conforming ones (same grid on both sides) are interpolated
    from the averaged analytic map when ``interpolate_conforming`` is set.
    Only full-face pairs are repaired: a GD face shared by several simplices
    would need a piecewise curve the GD space cannot represent.  Simplex
    pairs interpolate the same map at coincident face nodes already.
    """
    for iface in interfaces:
        if iface.plus is None or iface.minus_range != (-1.0, 1.0):
            continue
        (ia, fa), (ib, fb) = iface.minus, iface.plus
        ea, eb = elements[ia], elements[ib]
        if not (ea.is_gd or eb.is_gd) or tuple(sorted(iface.plus_range)) != (-1.0, 1.0):
            continue
        sx, sy = iface.shift

        def curve(u, ea=ea, fa=fa, eb=eb, fb=fb, iface=iface, sx=sx, sy=sy):
            xa, ya = ea.face_map(fa, affine_param(u, *iface.minus_range))
            xb, yb = eb.face_map(fb, affine_param(u, *iface.plus_range))
            return 0.5 * (xa + xb - sx), 0.5 * (ya + yb - sy)

        if (interpolate_conforming and ea.is_gd and eb.is_gd
                and _gd_faces_conform(ea, fa, eb, fb)):
            shared = curve
        else:
            n = max(ea.n, eb.n)
            shared = fit_interface_curve(curve, n, npoints)

        for e, f, lo_hi, (dx, dy) in ((ea, fa, iface.minus_range, (0.0, 0.0)),
                                       (eb, fb, iface.plus_range, (sx, sy))):
            idx, t = _face_nodes(e, f)
            lo, hi = lo_hi
            u = -1.0 + 2.0 * (t - lo) / (hi - lo)
            x, y = shared(u)
            e.xdof = e.xdof.copy()
            e.ydof = e.ydof.copy()
            e.xdof[idx] = np.asarray(x) + dx
            e.ydof[idx] = np.asarray(y) + dy


def build_mortars(elements: list[Element], interfaces: list[Interface]):
    mortars: list[MortarElement] = []
    for k, iface in enumerate(interfaces):
        ia, fa = iface.minus
        ea = elements[ia]
        ub = mortar_breaks_in_u(ea.face_breakpoints(fa), *iface.minus_range)
        if iface.plus is not None:
            ib, fb = iface.plus
            eb = elements[ib]
            ub2 = mortar_breaks_in_u(eb.face_breakpoints(fb), *iface.plus_range)
            ub = build_mortar_partition(ub, ub2)
            order = max(ea.n, eb.n)
            plus_coords = lambda t, eb=eb, fb=fb: eb.face_coords(fb, t)
        else:
            order = ea.n
            plus_coords = None
        minus_coords = lambda t, ea=ea, fa=fa: ea.face_coords(fa, t)
        for u0, u1 in zip(ub[:-1], ub[1:]):
            mortars.append(build_mortar_element(
                k, iface, u0, u1, order, minus_coords, plus_coords, ea.face_sign(fa)))
    return mortars


_REF_NORMALS = {
    "gd": ((0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)),
    "simplex": ((0.0, -1.0), (1.0, 1.0), (-1.0, 0.0)),
}


def check_orientation(elements: list[Element], interfaces, mortars):
    """Normals must point along the mapped outward reference normal."""
    for m in mortars:
        ia, fa = interfaces[m.interface].minus
        e = elements[ia]
        r, s = e.face_ref_points(fa, m.t_minus)
        xr, xs, yr, ys = e.cmap.jacobian(r, s)
        a, b = _REF_NORMALS[e.kind][fa]
        dot = m.nx * (xr * a + xs * b) + m.ny * (yr * a + ys * b)
        if np.min(dot) <= 0:
            raise ValueError(f"mortar normal orientation check failed on interface "
                             f"{m.interface} (element {ia})")


def build_mesh(elements: list[Element], periodic_shifts=(),
               geometry_mode: GeometryMode = GeometryMode.WATERTIGHT,
               interpolate_conforming: bool = True,
               store_quadrature: bool = True,
               jac_mode: JacMode = JacMode.FROM_METRIC,
               check: bool = True) -> Mesh:
    geometry_mode = GeometryMode(geometry_mode)
    for e in elements:
        if e.is_gd:
            e.xdof, e.ydof = project_coordinates(e.ops, e.cmap)
        else:
            x, y = interpolate_coordinates(e.ops, e.cmap)
            e.xdof, e.ydof = np.asarray(x, dtype=float), np.asarray(y, dtype=float)

    interfaces = find_interfaces(elements, periodic_shifts)
    if geometry_mode is GeometryMode.WATERTIGHT:
        repair_interfaces(elements, interfaces, interpolate_conforming)

    for e in elements:
        e.geo = build_metric_terms(e.ops, e.xdof, e.ydof, store_quadrature, jac_mode)
        if check:
            e.geo.check()

    mortars = build_mortars(elements, interfaces)
    if check:
        check_orientation(elements, interfaces, mortars)
    offsets = np.concatenate(([0], np.cumsum([len(m.weights) for m in mortars])))
    return Mesh(elements, interfaces, mortars, geometry_mode, offsets)
