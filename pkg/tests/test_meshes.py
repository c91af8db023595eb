import numpy as np
import pytest

from gdwave import meshes
from gdwave.mesh import GeometryMode
from gdwave.mortar import BoundaryTag
from oracles import polygon_area


def mesh_area(mesh):
    return sum(float(np.sum(e.ops.W2 * e.geo.Jq)) for e in mesh.elements)


def count_tags(mesh):
    tags = [i.tag for i in mesh.interfaces]
    return {t: tags.count(t) for t in BoundaryTag}


def trace_gap(mesh):
    """Largest mismatch of the two sides' traced coordinates over all mortars."""
    gap = 0.0
    for m in mesh.mortars:
        iface = mesh.interfaces[m.interface]
        if iface.plus is None:
            continue
        ea, fa = iface.minus
        eb, fb = iface.plus
        xa, ya = mesh.elements[ea].face_coords(fa, m.t_minus)
        xb, yb = mesh.elements[eb].face_coords(fb, m.t_plus)
        gap = max(gap, np.max(np.abs(xa - xb + iface.shift[0])),
                  np.max(np.abs(ya - yb + iface.shift[1])))
    return gap


@pytest.mark.parametrize("mode", list(GeometryMode))
def test_skew_box_connectivity_and_area(mode):
    m = meshes.skew_box_mesh(3, "extrapolation", 0, geometry_mode=mode)
    tags = count_tags(m)
    assert len(m.elements) == 4
    assert tags[BoundaryTag.INTERIOR] == 4 and tags[BoundaryTag.WALL] == 8
    # projected boundary coordinates are accurate to O(h^n) only
    assert abs(mesh_area(m) - 4.0) < 1e-4


def test_watertight_traces_agree_discontinuous_do_not():
    wt = meshes.skew_box_mesh(3, "extrapolation", 0, periodic=True,
                              geometry_mode=GeometryMode.WATERTIGHT)
    dc = meshes.skew_box_mesh(3, "extrapolation", 0, periodic=True,
                              geometry_mode=GeometryMode.DISCONTINUOUS)
    assert count_tags(wt)[BoundaryTag.WALL] == 0
    assert trace_gap(wt) < 1e-13
    assert trace_gap(dc) > 1e-8


def test_mixed_quadrant_mesh():
    m = meshes.skew_box_mesh(3, "ghost", 0, simplex_quadrant=True,
                             geometry_mode=GeometryMode.WATERTIGHT)
    assert sum(1 for e in m.elements if not e.is_gd) == 4
    assert abs(mesh_area(m) - 4.0) < 1e-4
    assert trace_gap(m) < 1e-13


def test_square_triangles():
    tris = meshes.square_triangles(2)
    assert len(tris) == 64
    assert abs(sum(polygon_area(t) for t in tris) - 4.0) < 1e-13
    assert min(polygon_area(t) for t in tris) > 0
    m = meshes.square_triangle_mesh(2, 2, periodic=True)
    assert count_tags(m)[BoundaryTag.WALL] == 0
    true_inradius = 1.0 / (4.0 * (1.0 + np.sqrt(2.0)))
    assert abs(m.simplex_inradius_min() - true_inradius) < 1e-13
    assert abs(meshes.SQUARE_TRIANGLE_CFL_RADIUS - np.sqrt(2.0) * true_inradius) < 1e-15


@pytest.mark.parametrize("level", [0, 1])
def test_disk_simplicial(level):
    m = meshes.disk_simplicial_mesh(3, level)
    assert len(m.elements) == 48 * 4 ** level
    assert count_tags(m)[BoundaryTag.WALL] == 16 * 2 ** level
    assert abs(mesh_area(m) - np.pi) < 1e-4 / 4 ** level
    assert {e.base for e in m.elements} == set(range(48))


def test_disk_template_counts():
    assert len(meshes.disk_outer_triangles()) == 20
    assert len(meshes.disk_inner_triangles()) == 28
    inner = sum(polygon_area(t) for t in meshes.disk_inner_triangles())
    assert abs(inner - 2.0) < 1e-13


@pytest.mark.parametrize("builder", [meshes.disk_coupled_mesh, meshes.disk_gd_mesh])
def test_disk_gd_variants(builder):
    m = builder(3, "extrapolation", 0)
    assert abs(mesh_area(m) - np.pi) < 1e-4
    assert trace_gap(m) < 1e-12 or m.geometry_mode is GeometryMode.DISCONTINUOUS


def test_refined_maps_provenance():
    from gdwave.geometry import AffineMap
    parent = AffineMap.from_triangle((0, 0), (2, 0), (0, 2))
    kids = meshes.refined_maps(parent, 1)
    assert len(kids) == 4
    for child, sub in kids:
        r, s = np.array([-0.5, 0.2]), np.array([-0.5, -0.9])
        np.testing.assert_allclose(child(r, s), parent(*sub(r, s)), atol=1e-14)


def test_inclusion_triangulation():
    tris = meshes.inclusion_triangles()
    assert len(tris) == 240
    # square minus the inscribed polygons of the cylinders
    holes = sum(0.5 * m * R ** 2 * np.sin(2 * np.pi / m)
                for (_, R), m in zip(meshes.INCLUSION_CYLINDERS, meshes.INCLUSION_CIRCLE_POINTS))
    polys = sum(polygon_area(t) for t in tris)
    assert abs(polys - (100.0 - holes)) < 1e-10
    assert min(polygon_area(t) for t in tris) > 0


def test_zipper_strip():
    a = [np.array([x, 0.0]) for x in np.linspace(0, 1, 4)]
    b = [np.array([x, 1.0]) for x in np.linspace(0, 1, 3)]
    tris = meshes.zipper(a, b)
    assert len(tris) == 5
    assert abs(sum(abs(polygon_area(t)) for t in tris) - 1.0) < 1e-14
