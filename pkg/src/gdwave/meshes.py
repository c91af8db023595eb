"""Mesh catalog used by the experiments."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from gdwave.gd1d import GdOps1d, GdParams
from gdwave.gdtensor import GdElemOps
from gdwave.geometry import (
    AffineMap,
    ArcEdge,
    CompositeMap,
    CoordMap,
    CurvedTriangleMap,
    LineEdge,
    SkewBoxMap,
    TransfiniteMap,
)
from gdwave.mesh import GeometryMode, build_mesh, gd_element, simplex_element
from gdwave.simplex import build_simplex_ops


@lru_cache(maxsize=None)
def gd_ops_1d(n: int, nsub: int, closure: str) -> GdOps1d:
    return GdOps1d(GdParams.from_order(n, nsub, closure))


@lru_cache(maxsize=None)
def gd_block_ops(n: int, nr: int, ns: int, closure: str) -> GdElemOps:
    return GdElemOps(gd_ops_1d(n, nr, closure), gd_ops_1d(n, ns, closure))


# ---------------------------------------------------------------------------
# skewed box: four GD blocks with nonconforming interfaces
# ---------------------------------------------------------------------------

# quadrant boxes (x0, x1, y0, y1) and base grid sizes:
# bottom-left, bottom-right, top-left, top-right
SKEW_QUADRANTS = (((-1.0, 0.0, -1.0, 0.0), 21),
                  ((0.0, 1.0, -1.0, 0.0), 16),
                  ((-1.0, 0.0, 0.0, 1.0), 16),
                  ((0.0, 1.0, 0.0, 1.0), 21))


def skew_box_mesh(n: int, closure: str = "extrapolation", level: int = 0,
                  periodic: bool = False,
                  geometry_mode=GeometryMode.DISCONTINUOUS,
                  sizes: tuple[int, int] | None = None,
                  simplex_quadrant: bool = False, **kw):
    """Four GD quadrants of ``[-1,1]^2`` under the skew transform.

    ``sizes`` overrides the (16, 21) interior grid sizes, e.g. (21, 21) for
    the conforming reference.  With ``simplex_quadrant`` the top-right
    quadrant is four curved triangles (split by its diagonals, quadrisected
    ``level`` times) instead of a GD block.
    """
    skew = SkewBoxMap()
    elements = []
    for q, (box, nbase) in enumerate(SKEW_QUADRANTS):
        if simplex_quadrant and q == 3:
            ops = build_simplex_ops(n)
            for k, tri in enumerate(square_triangles(0, 0.0, 1.0)):
                for child, sub in refined_maps(AffineMap.from_triangle(*tri), level):
                    e = simplex_element(ops, CompositeMap(skew, child), curved=True)
                    e.base, e.ref_affine = q + k, sub
                    elements.append(e)
            continue
        if sizes is not None:
            nbase = sizes[0] if nbase == 16 else sizes[1]
        N = nbase * 2 ** level
        ops = gd_block_ops(n, N, N, closure)
        elements.append(gd_element(ops, CompositeMap(skew, AffineMap.from_box(*box))))
        elements[-1].base = q
    shifts = ((2.0, 0.0), (0.0, 2.0)) if periodic else ()
    return build_mesh(elements, shifts, geometry_mode, **kw)


def square_gd_mesh(n: int, nsub: int, closure: str = "extrapolation",
                   periodic: bool = False, cmap: CoordMap | None = None, **kw):
    """Single GD block on ``[-1,1]^2`` (or the image of ``cmap``)."""
    ops = gd_block_ops(n, nsub, nsub, closure)
    cmap = AffineMap(np.eye(2), np.zeros(2)) if cmap is None else cmap
    shifts = ((2.0, 0.0), (0.0, 2.0)) if periodic else ()
    e = gd_element(ops, cmap)
    e.base = 0
    return build_mesh([e], shifts, GeometryMode.WATERTIGHT, **kw)


# ---------------------------------------------------------------------------
# triangles
# ---------------------------------------------------------------------------

def quadrisect(tri):
    a, b, c = (np.asarray(v, dtype=float) for v in tri)
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    return [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]


def square_triangles(refinements: int = 2, lo: float = -1.0, hi: float = 1.0):
    """Square split by its diagonals, then quadrisected; counterclockwise."""
    c = np.array([0.5 * (lo + hi)] * 2)
    corners = [np.array(p) for p in ((lo, lo), (hi, lo), (hi, hi), (lo, hi))]
    tris = [(corners[k], corners[(k + 1) % 4], c) for k in range(4)]
    for _ in range(refinements):
        tris = [child for t in tris for child in quadrisect(t)]
    return tris


def triangle_mesh(n: int, triangles, periodic_shifts=(), **kw):
    ops = build_simplex_ops(n)
    elements = [simplex_element(ops, AffineMap.from_triangle(*t)) for t in triangles]
    return build_mesh(elements, periodic_shifts, GeometryMode.WATERTIGHT, **kw)


def square_triangle_mesh(n: int, refinements: int = 2, periodic: bool = False, **kw):
    shifts = ((2.0, 0.0), (0.0, 2.0)) if periodic else ()
    return triangle_mesh(n, square_triangles(refinements), shifts, **kw)


# length scale used to normalize simplex time steps on the 64-triangle
# square, sqrt(2)/(4(1+sqrt(2))); the true inradius of these triangles is
# 1/(4(1+sqrt(2))), smaller by sqrt(2)
SQUARE_TRIANGLE_CFL_RADIUS = np.sqrt(2.0) / (4.0 * (1.0 + np.sqrt(2.0)))


# ---------------------------------------------------------------------------
# curved triangles and refinement in reference space
# ---------------------------------------------------------------------------

REF_TRIANGLE = ((-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0))


def refine_reference(levels: int):
    """Reference sub-triangles after ``levels`` quadrisections."""
    tris = [tuple(np.array(v) for v in REF_TRIANGLE)]
    for _ in range(levels):
        tris = [child for t in tris for child in quadrisect(t)]
    return tris


def refined_maps(cmap: CoordMap, levels: int) -> list[tuple[CoordMap, AffineMap]]:
    """``(child map, reference sub-map)`` pairs under ``levels`` quadrisections."""
    subs = [AffineMap.from_triangle(*t) for t in refine_reference(levels)]
    if levels == 0:
        return [(cmap, subs[0])]
    if isinstance(cmap, AffineMap):
        # affine parents refine exactly in physical space
        return [(AffineMap(cmap.A @ a.A, cmap.A @ a.b + cmap.b), a) for a in subs]
    return [(CompositeMap(cmap, a), a) for a in subs]


def _cross(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _ccw(tri):
    a, b, c = (np.asarray(v, dtype=float) for v in tri)
    if _cross(b - a, c - a) < 0:
        return (a, c, b)
    return (a, b, c)


def _arc_face(tri, center, radius, tol=1e-12):
    """Face index whose two vertices lie on the circle, or ``None``."""
    on = [abs(np.hypot(*(v - np.asarray(center))) - radius) < tol for v in tri]
    for f in range(3):
        if on[f] and on[(f + 1) % 3]:
            return f
    return None


def triangle_cmap(tri, circles=()) -> tuple[CoordMap, bool]:
    """Affine map, or a curved map when a face lies on one of ``circles``.

    ``circles`` holds ``(center, radius)`` pairs.
    """
    tri = _ccw(tri)
    for center, radius in circles:
        f = _arc_face(tri, center, radius)
        if f is not None:
            return CurvedTriangleMap(np.array(tri), f, tuple(center), radius), True
    return AffineMap.from_triangle(*tri), False


def zipper(chain_a, chain_b, ta=None, tb=None):
    """Triangulate the strip between two point chains with shared ends.

    ``ta``, ``tb`` are increasing chain parameters on ``[0, 1]`` (uniform by
    default); the merge advances whichever chain has the smaller next
    parameter.  Degenerate triangles at shared endpoints are dropped.
    """
    na, nb = len(chain_a) - 1, len(chain_b) - 1
    ta = np.linspace(0, 1, na + 1) if ta is None else np.asarray(ta)
    tb = np.linspace(0, 1, nb + 1) if tb is None else np.asarray(tb)
    i = j = 0
    tris = []
    while i < na or j < nb:
        if j == nb or (i < na and ta[i + 1] <= tb[j + 1]):
            tri = (chain_a[i], chain_a[i + 1], chain_b[j])
            i += 1
        else:
            tri = (chain_a[i], chain_b[j + 1], chain_b[j])
            j += 1
        a, b, c = (np.asarray(v) for v in tri)
        if abs(_cross(b - a, c - a)) > 1e-14:
            tris.append(tri)
    return tris


# ---------------------------------------------------------------------------
# unit disk
# ---------------------------------------------------------------------------

# Disk template: the inscribed square with corners (+-c, +-c), c = sqrt(2)/2,
# has each side split in three.  Each circular segment between a side and its
# arc (arc split in four) is zipped into 5 triangles (20 in total).  The
# square is a 3x3 grid of cells; the four edge-middle cells and the center
# cell are split into 4 triangles about their centroid, the corner cells along
# the diagonal through the disk center (28 triangles).

DISK_C = np.sqrt(2.0) / 2.0
UNIT_CIRCLE = (((0.0, 0.0), 1.0),)
DISK_SIDE_SEGMENTS = 3
DISK_ARC_SEGMENTS = 4


def _rot(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def disk_outer_triangles():
    c = DISK_C
    out = []
    for k in range(4):
        R = _rot(k * np.pi / 2)
        side = [R @ np.array([c, -c + 2 * c * i / DISK_SIDE_SEGMENTS])
                for i in range(DISK_SIDE_SEGMENTS + 1)]
        th = -np.pi / 4 + k * np.pi / 2 + np.pi / 2 * np.arange(DISK_ARC_SEGMENTS + 1) / DISK_ARC_SEGMENTS
        arc = [np.array([np.cos(t), np.sin(t)]) for t in th]
        # corners coincide exactly
        arc[0], arc[-1] = side[0], side[-1]
        out.extend(_ccw(t) for t in zipper(side, arc))
    return out


def disk_inner_triangles():
    g = np.linspace(-DISK_C, DISK_C, DISK_SIDE_SEGMENTS + 1)
    fan_cells = {(0, 1), (1, 0), (2, 1), (1, 2), (1, 1)}
    out = []
    for a in range(3):
        for b in range(3):
            p00 = np.array([g[a], g[b]])
            p10 = np.array([g[a + 1], g[b]])
            p11 = np.array([g[a + 1], g[b + 1]])
            p01 = np.array([g[a], g[b + 1]])
            if (a, b) in fan_cells:
                m = 0.25 * (p00 + p10 + p11 + p01)
                ring = (p00, p10, p11, p01)
                out.extend((ring[q], ring[(q + 1) % 4], m) for q in range(4))
            elif (a - 1) * (b - 1) > 0:
                out.extend([(p00, p10, p11), (p00, p11, p01)])
            else:
                out.extend([(p00, p10, p01), (p10, p11, p01)])
    return out


def _simplices(n: int, triangles, level: int, circles=(), base_offset: int = 0):
    ops = build_simplex_ops(n)
    elements = []
    for base, tri in enumerate(triangles):
        cmap, curved = triangle_cmap(tri, circles)
        for child, sub in refined_maps(cmap, level):
            e = simplex_element(ops, child, curved)
            e.base, e.ref_affine = base_offset + base, sub
            elements.append(e)
    return elements


def disk_simplicial_mesh(n: int, level: int = 0,
                         geometry_mode=GeometryMode.WATERTIGHT, **kw):
    """48-triangle disk (28 inside the square, 20 curved-boundary strip)."""
    tris = disk_inner_triangles() + disk_outer_triangles()
    return build_mesh(_simplices(n, tris, level, UNIT_CIRCLE), (), geometry_mode, **kw)


# (n) -> N0 for the central GD square of the coupled mesh
DISK_COUPLED_N0 = {"extrapolation": {3: 11, 5: 18, 7: 25, 9: 31, 11: 37},
                   "ghost": {3: 9, 5: 14, 7: 19, 9: 24, 11: 28}}
# (n) -> (N1, N2, N3) for the five-block GD disk
DISK_GD_SIZES = {"extrapolation": {3: (4, 6, 10), 5: (7, 10, 17), 7: (10, 15, 24),
                                   9: (14, 20, 33), 11: (16, 23, 38)},
                 "ghost": {3: (4, 6, 10), 5: (6, 9, 15), 7: (7, 10, 17),
                           9: (11, 16, 26), 11: (13, 19, 31)}}


def disk_coupled_mesh(n: int, closure: str = "extrapolation", level: int = 0,
                      N0: int | None = None, geometry_mode=GeometryMode.WATERTIGHT, **kw):
    """Central GD square with corners on the circle plus the 20-triangle strip."""
    if N0 is None:
        if n not in DISK_COUPLED_N0[closure]:
            raise ValueError(f"no coupled-disk grid size for n={n}, closure={closure}")
        N0 = DISK_COUPLED_N0[closure][n]
    N = N0 * 2 ** level
    gd = gd_element(gd_block_ops(n, N, N, closure),
                    AffineMap.from_box(-DISK_C, DISK_C, -DISK_C, DISK_C))
    gd.base = 0
    elements = [gd] + _simplices(n, disk_outer_triangles(), level, UNIT_CIRCLE, 1)
    return build_mesh(elements, (), geometry_mode, **kw)


def disk_gd_mesh(n: int, closure: str = "extrapolation", level: int = 0,
                 sizes: tuple[int, int, int] | None = None, **kw):
    """Five GD blocks: center square ``[-1/3, 1/3]^2`` and four curved blocks.

    Outer blocks run radially in ``r`` (``N2`` cells) and counterclockwise
    in ``s`` (``N3`` cells).
    """
    if sizes is None:
        if n not in DISK_GD_SIZES[closure]:
            raise ValueError(f"no GD-disk grid sizes for n={n}, closure={closure}")
        sizes = DISK_GD_SIZES[closure][n]
    N1, N2, N3 = (s * 2 ** level for s in sizes)
    a, c = 1.0 / 3.0, DISK_C
    elements = [gd_element(gd_block_ops(n, N1, N1, closure), AffineMap.from_box(-a, a, -a, a))]
    elements[0].base = 0
    outer_ops = gd_block_ops(n, N2, N3, closure)
    for k in range(4):
        R = _rot(k * np.pi / 2)
        p = [R @ np.array(v) for v in ((a, -a), (c, -c), (c, c), (a, a))]
        edges = (LineEdge(p[0], p[1]),
                 ArcEdge((0.0, 0.0), 1.0, -np.pi / 4 + k * np.pi / 2, np.pi / 4 + k * np.pi / 2),
                 LineEdge(p[3], p[2]),
                 LineEdge(p[0], p[3]))
        elements.append(gd_element(outer_ops, TransfiniteMap(edges)))
        elements[-1].base = k + 1
    return build_mesh(elements, (), GeometryMode.WATERTIGHT, **kw)


# ---------------------------------------------------------------------------
# inclusion scattering
# ---------------------------------------------------------------------------

# Domain [-15, 15]^2: eight 10x10 GD blocks around the simplicial region
# [-5, 5]^2 that contains the four cylinders (center, radius).
INCLUSION_CYLINDERS = (((2.0, 2.0), 2.0), ((-2.0, -2.0), 2.5),
                       ((-3.0, 2.5), 1.5), ((2.5, -3.0), 1.0))
INCLUSION_HALF = 5.0
INCLUSION_BLOCK = 10.0
INCLUSION_SIDE_SEGMENTS = 8
# points per cylinder boundary
INCLUSION_CIRCLE_POINTS = (10, 12, 8, 8)
INCLUSION_TRIANGLES = 240
INCLUSION_SMOOTHING_SWEEPS = 30


def _farthest_points(candidates, fixed, count):
    """Greedy farthest-point selection of ``count`` candidates."""
    d = np.min(np.linalg.norm(candidates[:, None, :] - fixed[None, :, :], axis=2), axis=1)
    chosen = []
    for _ in range(count):
        k = int(np.argmax(d))
        chosen.append(candidates[k])
        d = np.minimum(d, np.linalg.norm(candidates - candidates[k], axis=1))
    return np.array(chosen)


def inclusion_triangles(ntri: int = INCLUSION_TRIANGLES):
    """Triangulation of ``[-5,5]^2`` minus the cylinders.

    Boundary points: 8 segments per square side and a fixed count per
    circle.  Interior points are picked by farthest-point sampling so that
    the Delaunay triangulation has exactly ``ntri`` triangles.
    """
    from scipy.spatial import Delaunay

    a = INCLUSION_HALF
    ns = INCLUSION_SIDE_SEGMENTS
    t = np.linspace(-a, a, ns + 1)
    square = ([(x, -a) for x in t[:-1]] + [(a, y) for y in t[:-1]]
              + [(x, a) for x in t[::-1][:-1]] + [(-a, y) for y in t[::-1][:-1]])
    circ = []
    for (c, R), m in zip(INCLUSION_CYLINDERS, INCLUSION_CIRCLE_POINTS):
        th = 2 * np.pi * np.arange(m) / m
        circ.extend(zip(c[0] + R * np.cos(th), c[1] + R * np.sin(th)))
    boundary = np.array(square + circ)
    # Euler: ntri = 2 V_interior + V_boundary - 2 + 2 * holes
    nint, rem = divmod(ntri - len(boundary) + 2 - 2 * len(INCLUSION_CYLINDERS), 2)
    if rem or nint < 0:
        raise ValueError(f"cannot reach {ntri} triangles with this boundary")
    spacing = 2 * a / ns
    g = np.arange(-a, a + 1e-9, 0.125)
    X, Y = np.meshgrid(g, g)
    cand = np.column_stack((X.ravel(), Y.ravel()))
    keep = np.max(np.abs(cand), axis=1) <= a - 0.6 * spacing
    for c, R in INCLUSION_CYLINDERS:
        keep &= np.hypot(cand[:, 0] - c[0], cand[:, 1] - c[1]) >= R + 0.6 * spacing
    interior = _farthest_points(cand[keep], boundary, nint)
    nb = len(boundary)
    pts = np.vstack((boundary, interior))
    # a far frame keeps the square sides off the convex hull; it is distant
    # enough that every side segment remains a Delaunay edge
    b = a + 3.0
    f = np.linspace(-b, b, int(round(2 * b / spacing)) + 1)
    frame = np.array([(x, -b) for x in f[:-1]] + [(b, y) for y in f[:-1]]
                     + [(x, b) for x in f[::-1][:-1]] + [(-b, y) for y in f[::-1][:-1]])

    def triangulate(p):
        q = np.vstack((p, frame))
        keep = []
        for simp in Delaunay(q).simplices:
            if np.any(simp >= len(p)):
                continue
            cen = q[simp].mean(axis=0)
            if np.max(np.abs(cen)) > a or any(
                    np.hypot(*(cen - np.asarray(c))) < R for c, R in INCLUSION_CYLINDERS):
                continue
            keep.append(simp)
        return np.array(keep)

    # damped Laplacian smoothing of the interior points raises the smallest
    # inradius from about 0.060 to 0.087
    for _ in range(INCLUSION_SMOOTHING_SWEEPS):
        simp = triangulate(pts)
        acc = np.zeros_like(pts)
        cnt = np.zeros(len(pts))
        for t in simp:
            for i in t:
                for j in t:
                    if i != j:
                        acc[i] += pts[j]
                        cnt[i] += 1
        inner = np.arange(nb, len(pts))
        pts[inner] = 0.5 * pts[inner] + 0.5 * acc[inner] / cnt[inner, None]
    out = [_ccw(tuple(pts[t])) for t in triangulate(pts)]
    if len(out) != ntri:
        raise ValueError(f"inclusion triangulation has {len(out)} triangles, expected {ntri}")
    return out


def inclusion_mesh(n: int, level: int = 0, closure: str = "extrapolation",
                   triangles=None, **kw):
    """Eight GD blocks with ``(8n+1)^2`` interior grids around the simplices."""
    tris = inclusion_triangles() if triangles is None else triangles
    elements = []
    N = 8 * n * 2 ** level
    ops = gd_block_ops(n, N, N, closure)
    a, b = INCLUSION_HALF, INCLUSION_HALF + INCLUSION_BLOCK
    edges = (-b, -a, a, b)
    for i in range(3):
        for j in range(3):
            if i == 1 and j == 1:
                continue
            box = (edges[i], edges[i + 1], edges[j], edges[j + 1])
            e = gd_element(ops, AffineMap.from_box(*box))
            e.base = len(elements)
            elements.append(e)
    elements += _simplices(n, tris, level, INCLUSION_CYLINDERS, len(elements))
    return build_mesh(elements, (), GeometryMode.WATERTIGHT, **kw)
