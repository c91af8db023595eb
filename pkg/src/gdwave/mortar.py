"""Mortar partitions, mortar geometry, and the numerical flux.

An interface is a curve shared by a face of a "minus" element and a face of a
"plus" element (or a wall).  The interface parameter ``u`` in ``[-1, 1]`` runs
along the minus face in its increasing face coordinate.  The mortar partition
is the union of both sides' breakpoints; each mortar element carries a
Legendre-Gauss rule, a surface Jacobian, and the unit normal pointing out of
the minus element.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from gdwave.quadrule import lagrange_diff_matrix, legendre_gauss


class BoundaryTag(str, enum.Enum):
    INTERIOR = "interior"
    WALL = "wall"
    PERIODIC = "periodic"


def build_mortar_partition(a_breaks, b_breaks, rtol: float = 1e-10) -> np.ndarray:
    """Sorted union of two breakpoint sets sharing the endpoints ``-1, 1``."""
    a = np.sort(np.asarray(a_breaks, dtype=float))
    b = np.sort(np.asarray(b_breaks, dtype=float))
    scale = max(1.0, np.max(np.abs(np.concatenate((a, b)))))
    tol = rtol * scale
    if abs(a[0] - b[0]) > tol or abs(a[-1] - b[-1]) > tol:
        raise ValueError(
            f"interface endpoints do not match: [{a[0]}, {a[-1]}] vs [{b[0]}, {b[-1]}]")
    pts = np.sort(np.concatenate((a, b)))
    merged = [pts[0]]
    for p in pts[1:]:
        if p - merged[-1] > tol:
            merged.append(p)
    merged[0], merged[-1] = a[0], a[-1]
    return np.array(merged)


def numerical_flux(pm, pp, vnm, vnp, alpha: float):
    """Upwind-weighted flux; ``vnp`` is measured along the minus normal.

    Returns ``(p*, vn*)`` with ``p* = {p} - alpha/2 [vn]``,
    ``vn* = {vn} - alpha/2 [p]`` and ``[q] = q+ - q-``.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    pstar = 0.5 * (pm + pp) - 0.5 * alpha * (vnp - vnm)
    vnstar = 0.5 * (vnm + vnp) - 0.5 * alpha * (pp - pm)
    return pstar, vnstar


def wall_state(pm, vnm):
    """Mirror state enforcing zero normal velocity."""
    return pm, -vnm


def affine_param(u, lo, hi):
    """Map ``u`` in [-1, 1] affinely onto ``[lo, hi]`` (``hi < lo`` reverses)."""
    return lo + 0.5 * (np.asarray(u, dtype=float) + 1.0) * (hi - lo)


@dataclass
class Interface:
    """Shared curve between two element faces, or a wall face.

    ``minus_range`` is the minus face parameter interval (increasing);
    ``plus_range = (c, d)`` gives the plus face parameter at ``u = -1`` and
    ``u = 1``.  For periodic pairs the plus geometry equals the minus geometry
    translated by ``shift``.
    """

    minus: tuple[int, int]
    plus: tuple[int, int] | None
    minus_range: tuple[float, float] = (-1.0, 1.0)
    plus_range: tuple[float, float] = (1.0, -1.0)
    tag: BoundaryTag = BoundaryTag.INTERIOR
    shift: tuple[float, float] = (0.0, 0.0)


@dataclass
class MortarElement:
    """One mortar patch with quadrature data at its nodes."""

    interface: int
    u0: float
    u1: float
    order: int
    t_minus: np.ndarray
    t_plus: np.ndarray | None
    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    SJ: np.ndarray
    nx: np.ndarray
    ny: np.ndarray
    tag: BoundaryTag


def mortar_breaks_in_u(face_breaks, lo, hi, rtol=1e-10):
    """Face breakpoints inside ``[lo, hi]`` expressed in the interface parameter."""
    fb = np.asarray(face_breaks, dtype=float)
    a, b = min(lo, hi), max(lo, hi)
    tol = rtol * max(1.0, abs(a), abs(b))
    inner = fb[(fb > a + tol) & (fb < b - tol)]
    u = -1.0 + 2.0 * (inner - lo) / (hi - lo)
    return np.sort(np.concatenate(([-1.0, 1.0], u)))


def build_mortar_element(iface_id: int, iface: Interface, u0: float, u1: float,
                         order: int, minus_coords, plus_coords, minus_sign: float
                         ) -> MortarElement:
    """Quadrature, surface Jacobian and normal of one mortar patch.

    ``minus_coords(t)``/``plus_coords(t)`` return the traced physical
    coordinates at face parameters ``t`` of each side; the mortar geometry is
    their average (the plus side translated back for periodic pairs).
    ``minus_sign`` is +1 when the increasing minus face parameter runs
    counterclockwise around the minus element.
    """
    q = legendre_gauss(order + 1)
    u = u0 + 0.5 * (q.nodes + 1.0) * (u1 - u0)
    tm = affine_param(u, *iface.minus_range)
    xm, ym = minus_coords(tm)
    tp = None
    if iface.plus is not None:
        tp = affine_param(u, *iface.plus_range)
        xp, yp = plus_coords(tp)
        x = 0.5 * (xm + xp - iface.shift[0])
        y = 0.5 * (ym + yp - iface.shift[1])
    else:
        x, y = np.asarray(xm, dtype=float), np.asarray(ym, dtype=float)
    d = lagrange_diff_matrix(q.nodes)
    xt, yt = d @ x, d @ y
    sj = np.hypot(xt, yt)
    if np.min(sj) <= 0:
        raise ValueError(f"degenerate mortar on interface {iface_id}")
    nx = minus_sign * yt / sj
    ny = -minus_sign * xt / sj
    return MortarElement(iface_id, u0, u1, order, tm, tp, x, y, q.weights.copy(),
                         sj, nx, ny, iface.tag)
