import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gdwave.mortar import (
    BoundaryTag,
    Interface,
    affine_param,
    build_mortar_element,
    build_mortar_partition,
    mortar_breaks_in_u,
    numerical_flux,
    wall_state,
)
from gdwave.geometry import boundary_normal_flux
from gdwave.mesh import GeometryMode
from gdwave.meshes import skew_box_mesh
from gdwave.solver import WaveSolver


def test_partition_is_sorted_union():
    a = np.linspace(-1, 1, 4)
    b = np.linspace(-1, 1, 3)
    np.testing.assert_allclose(build_mortar_partition(a, b), [-1, -1 / 3, 0, 1 / 3, 1])


def test_partition_merges_near_duplicates():
    p = build_mortar_partition([-1, 0.0, 1], [-1, 1e-13, 1])
    assert len(p) == 3


def test_partition_rejects_mismatched_endpoints():
    with pytest.raises(ValueError):
        build_mortar_partition([-1, 1], [-1, 0.9])


def test_breaks_in_reversed_range():
    u = mortar_breaks_in_u(np.linspace(-1, 1, 5), 0.0, -1.0)
    np.testing.assert_allclose(u, [-1, 0, 1])
    np.testing.assert_allclose(affine_param(u, 0.0, -1.0), [0.0, -0.5, -1.0])


@settings(max_examples=50, deadline=None)
@given(*[st.floats(-10, 10) for _ in range(4)], st.floats(0, 2))
def test_flux_dissipates(pm, pp, vm, vp, alpha):
    ps, vs = numerical_flux(pm, pp, vm, vp, alpha)
    # both sides' face terms in dE/dt, volume terms already integrated by parts
    rate = (pp - pm) * vs + (vp - vm) * ps + pm * vm - pp * vp
    assert rate <= 1e-9 * (1 + abs(pm) + abs(pp)) ** 2
    np.testing.assert_allclose(rate, -0.5 * alpha * ((pp - pm) ** 2 + (vp - vm) ** 2),
                               atol=1e-9 * (1 + abs(pm) + abs(pp) + abs(vm) + abs(vp)) ** 2)


def test_flux_consistency_and_wall():
    assert numerical_flux(2.0, 2.0, 0.5, 0.5, 1.0) == (2.0, 0.5)
    p, v = wall_state(1.5, 0.7)
    assert numerical_flux(1.5, p, 0.7, v, 1.0)[1] == 0.0
    with pytest.raises(ValueError):
        numerical_flux(0, 0, 0, 0, -1.0)


def test_mortar_on_unit_circle_arc():
    iface = Interface((0, 0), None, tag=BoundaryTag.WALL)

    def arc(t):
        th = 0.25 * np.pi * (t + 1)
        return np.cos(th), np.sin(th)

    m = build_mortar_element(0, iface, -1.0, 1.0, 12, arc, None, 1.0)
    assert abs(np.sum(m.weights * m.SJ) - 0.5 * np.pi) < 1e-12
    # the arc runs counterclockwise around the element inside the circle, so
    # the outward normal is radial
    np.testing.assert_allclose(m.nx * m.x + m.ny * m.y, 1.0, atol=1e-12)


def _surface_mismatch(mode, mixed):
    mesh = skew_box_mesh(3, "extrapolation", 0, False, mode, (4, 5), simplex_quadrant=mixed)
    s = WaveSolver(mesh)
    rng = np.random.default_rng(1)
    worst = 0.0
    for i, e in enumerate(mesh.elements):
        if not e.is_gd:
            continue
        w = s.zeros()
        view = s.element_view(w, i)
        view[1:] = rng.standard_normal((2, e.ndof))
        tr = s.face_traces(w)
        vn = s.nx * tr[:, 1] + s.ny * tr[:, 2]
        mortar_sum = float(np.sum(s.sjw * (vn[0] - vn[1])))
        own = boundary_normal_flux(e.ops, e.xdof, e.ydof, view[1], view[2])
        worst = max(worst, abs(own - mortar_sum) / np.linalg.norm(view[1:]))
    return worst


@pytest.mark.parametrize("mixed", [False, True])
def test_element_surface_integral_equals_mortar_sides(mixed):
    """Watertight: each GD element's own boundary integral of ``v.n`` equals
    the sum over its mortar sides."""
    assert _surface_mismatch(GeometryMode.WATERTIGHT, mixed) <= 1e-11
    assert _surface_mismatch(GeometryMode.DISCONTINUOUS, mixed) > 1e-6


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_mortar_energy_rate_on_random_data(alpha):
    """Summed over both sides with surface weights ``SJ W`` the face terms
    equal ``-(alpha/2) ([p]^T SJW [p] + [v_n]^T SJW [v_n])``."""
    rng = np.random.default_rng(7)
    pm, pp, vm, vp = rng.standard_normal((4, 200))
    sjw = rng.uniform(0.01, 1.0, 200)
    ps, vs = numerical_flux(pm, pp, vm, vp, alpha)
    minus = sjw @ (pm * vm - pm * vs - vm * ps)
    plus = sjw @ (-pp * vp + pp * vs + vp * ps)
    want = -0.5 * alpha * (sjw @ (pp - pm) ** 2 + sjw @ (vp - vm) ** 2)
    assert abs(minus + plus - want) <= 1e-12 * sjw @ (pm ** 2 + pp ** 2 + vm ** 2 + vp ** 2)
