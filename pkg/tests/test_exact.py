from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from gdwave.exact import (BoxModal, DiskBessel, RingPulse, bessel_j, bessel_j_prime,
                          bessel_prime_root_near, bessel_prime_roots)


@pytest.mark.parametrize("nu", [0, 1, 2, 7, 12])
def test_bessel_matches_scipy(nu):
    x = np.concatenate([np.linspace(1e-3, 5, 50), np.linspace(5, 120, 300)])
    np.testing.assert_allclose(bessel_j(nu, x), special.jv(nu, x), atol=1e-13)
    np.testing.assert_allclose(bessel_j_prime(nu, x), special.jvp(nu, x), atol=1e-13)


def test_bessel_at_origin_and_negative_argument():
    assert bessel_j(0, 0.0) == 1.0 and bessel_j(3, 0.0) == 0.0
    np.testing.assert_allclose(bessel_j(3, -2.5), -special.jv(3, 2.5), atol=1e-14)


def test_bessel_rejects_fractional_order():
    with pytest.raises(ValueError):
        bessel_j(1.5, 1.0)


def test_bessel_prime_roots_match_scipy():
    np.testing.assert_allclose(bessel_prime_roots(7, 5), special.jnp_zeros(7, 5), atol=1e-10)


def test_second_root_and_normalization():
    R0 = bessel_prime_roots(7, 2)[1]
    assert abs(R0 - 12.93238624) < 1e-7
    d = DiskBessel.normalized(7, R0)
    assert abs(d.amplitude - 0.024) < 1e-3
    assert abs(d.energy() - 1.0) < 1e-12


def test_high_frequency_root_is_nearest():
    r = bessel_prime_root_near(7, 109.6)
    zeros = special.jnp_zeros(7, 40)
    assert abs(r - zeros[np.argmin(np.abs(zeros - 109.6))]) < 1e-9


@lru_cache(maxsize=None)
def disk():
    return DiskBessel.normalized(7, bessel_prime_roots(7, 2)[1])


def _energy_by_cartesian_quadrature(d, m=400):
    # midpoint polar grid, independent of the radial Gauss rule
    r = (np.arange(m) + 0.5) / m
    th = 2 * np.pi * (np.arange(2 * m) + 0.5) / (2 * m)
    R, T = np.meshgrid(r, th, indexing="ij")
    p, vx, vy = d(R * np.cos(T), R * np.sin(T), 0.37)
    return 0.5 * np.sum((p ** 2 + vx ** 2 + vy ** 2) * R) / m * (2 * np.pi / (2 * m))


def test_disk_energy_by_independent_quadrature():
    d = DiskBessel(7, bessel_prime_roots(7, 2)[1], 1.0)
    assert abs(_energy_by_cartesian_quadrature(d) / d.energy() - 1.0) < 1e-4


def _residual(f, x, y, t, h=1e-4):
    def d(fun, i, axis):
        if axis == 0:
            return (fun(x + h, y, t)[i] - fun(x - h, y, t)[i]) / (2 * h)
        if axis == 1:
            return (fun(x, y + h, t)[i] - fun(x, y - h, t)[i]) / (2 * h)
        return (fun(x, y, t + h)[i] - fun(x, y, t - h)[i]) / (2 * h)
    r0 = d(f, 0, 2) + d(f, 1, 0) + d(f, 2, 1)
    r1 = d(f, 1, 2) + d(f, 0, 0)
    r2 = d(f, 2, 2) + d(f, 0, 1)
    return max(np.max(np.abs(r0)), np.max(np.abs(r1)), np.max(np.abs(r2)))


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.95, 0.95), st.floats(-0.95, 0.95), st.floats(0, 1))
def test_box_modal_solves_the_wave_system(x, y, t):
    f = BoxModal(3)
    assert _residual(f, x, y, t) < 1e-5 * f.omega ** 3


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 0.95), st.floats(0, 2 * np.pi), st.floats(0, 1))
def test_disk_bessel_solves_the_wave_system(r, th, t):
    d = disk()
    scale = d.amplitude * d.R0 ** 3
    assert _residual(d, r * np.cos(th), r * np.sin(th), t) < 1e-5 * scale


def test_wall_conditions():
    s = np.linspace(-1, 1, 41)
    f = BoxModal(15)
    for t in (0.1, 0.33):
        assert np.max(np.abs(f(np.full_like(s, 1.0), s, t)[1])) < 1e-13
        assert np.max(np.abs(f(s, np.full_like(s, -1.0), t)[2])) < 1e-13
    d = disk()
    th = np.linspace(0, 2 * np.pi, 50)
    p, vx, vy = d(np.cos(th), np.sin(th), 0.2)
    assert np.max(np.abs(vx * np.cos(th) + vy * np.sin(th))) < 1e-9 * np.max(np.abs(p))


def test_box_modal_period_returns_initial_state():
    f = BoxModal(15)
    x = np.linspace(-1, 1, 17)
    for a, b in zip(f(x, x[::-1], 0.0), f(x, x[::-1], f.period)):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_ring_pulse_starts_at_rest():
    p, vx, vy = RingPulse()(np.array([10.0, 0.0]), np.array([0.0, 0.0]))
    assert p[0] == 1.0 and p[1] < 1e-50
    assert not vx.any() and not vy.any()
