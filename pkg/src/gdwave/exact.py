"""Exact solutions and initial data for the experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gdwave.quadrule import legendre_gauss


@dataclass(frozen=True)
class BoxModal:
    """Standing mode of the unit box ``[-1,1]^2`` with walls.

    Satisfies ``p_t + div v = 0``, ``v_t + grad p = 0`` and ``v.n = 0``.
    """

    k: int = 15

    @property
    def omega(self) -> float:
        return np.sqrt(2.0) / 2.0 * np.pi * self.k

    @property
    def period(self) -> float:
        return 2.0 * np.sqrt(2.0) / self.k

    def __call__(self, x, y, t):
        a = 0.5 * np.pi * self.k * (np.asarray(x) + 1.0)
        b = 0.5 * np.pi * self.k * (np.asarray(y) + 1.0)
        wt = self.omega * t
        p = np.sqrt(2.0) * np.cos(a) * np.cos(b) * np.cos(wt)
        vx = np.sin(a) * np.cos(b) * np.sin(wt)
        vy = np.cos(a) * np.sin(b) * np.sin(wt)
        return p, vx, vy


def _bessel_table(nmax: int, x: np.ndarray) -> np.ndarray:
    """``J_0 .. J_nmax`` at ``x > 0`` by Miller's downward recurrence.

    The recurrence starts well above both ``nmax`` and ``x`` and is
    normalized with ``J_0 + 2 sum_k J_2k = 1``.
    """
    x = np.asarray(x, dtype=float)
    top = int(max(nmax, np.max(x, initial=0.0))) + 40 + int(np.sqrt(40 * max(nmax, 1)))
    top += top % 2
    out = np.zeros((nmax + 1,) + x.shape)
    jp1 = np.zeros_like(x)
    j = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    for k in range(top, 0, -1):
        jm1 = (2.0 * k / x) * j - jp1
        jp1, j = j, jm1
        # j now holds J_{k-1}
        if k - 1 <= nmax:
            out[k - 1] = j
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        big = np.abs(j) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j *= scale
            jp1 *= scale
            norm *= scale
            out[:, big] *= 1e-250
    norm += j
    return out / norm


def bessel_j(nu: int, x) -> np.ndarray:
    """Bessel function of the first kind of integer order ``nu >= 0``."""
    if nu < 0 or int(nu) != nu:
        raise ValueError(f"integer order >= 0 required, got {nu}")
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    pos = ax > 0
    safe = np.where(pos, ax, 1.0)
    val = _bessel_table(int(nu), safe)[int(nu)]
    val = np.where(pos, val, 1.0 if nu == 0 else 0.0)
    # J_nu(-x) = (-1)^nu J_nu(x)
    return np.where(x < 0, (-1) ** int(nu) * val, val)


def bessel_j_prime(nu: int, x) -> np.ndarray:
    """``J_nu'`` from ``2 J_nu' = J_{nu-1} - J_{nu+1}`` (``J_0' = -J_1``)."""
    if nu == 0:
        return -bessel_j(1, x)
    return 0.5 * (bessel_j(nu - 1, x) - bessel_j(nu + 1, x))


def _bisect(f, a, b, tol=1e-12):
    fa = f(a)
    while b - a > tol * max(1.0, abs(a)):
        m = 0.5 * (a + b)
        fm = f(m)
        if fa * fm <= 0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def bessel_prime_roots(beta: int, count: int) -> np.ndarray:
    """First ``count`` positive roots of ``J_beta'``: coarse scan, then bisection."""
    roots = []
    step, chunk = 0.05, 400
    start = 1e-3 if beta == 0 else 0.5 * beta + 1e-3
    while len(roots) < count:
        x = start + step * np.arange(chunk + 1)
        f = bessel_j_prime(beta, x)
        for i in np.flatnonzero(f[:-1] * f[1:] <= 0):
            if f[i] == 0.0:
                roots.append(float(x[i]))
            elif f[i + 1] != 0.0:
                roots.append(_bisect(lambda z: float(bessel_j_prime(beta, z)), x[i], x[i + 1]))
        start = x[-1]
    return np.array(roots[:count])


def bessel_prime_root_near(beta: float, target: float) -> float:
    """Root of ``J_beta'`` closest to ``target``."""
    roots = bessel_prime_roots(beta, int(target / np.pi) + 8)
    return float(roots[np.argmin(np.abs(roots - target))])


@dataclass(frozen=True)
class DiskBessel:
    """Rotating Bessel mode in the unit disk with a wall at ``r = 1``.

    With ``u = a cos(R0 t - beta theta) J_beta(R0 r)`` solving ``u_tt = lap u``,
    the fields are ``p = u_tt`` and ``v = -grad u_t``.  ``R0`` is a root of
    ``J_beta'`` so the normal velocity vanishes on the circle.
    """

    beta: int
    R0: float
    amplitude: float = 1.0

    @classmethod
    def normalized(cls, beta: int, R0: float) -> "DiskBessel":
        """Amplitude chosen so the solution energy is 1."""
        e1 = cls(beta, R0, 1.0).energy()
        return cls(beta, R0, 1.0 / np.sqrt(e1))

    @property
    def period(self) -> float:
        return 2.0 * np.pi * self.beta / self.R0

    def __call__(self, x, y, t):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        a, b, k = self.amplitude, self.beta, self.R0
        phase = k * t - b * th
        J = bessel_j(b, k * r)
        dJ = bessel_j_prime(b, k * r)
        p = -a * k * k * np.cos(phase) * J
        vr = a * k * k * np.sin(phase) * dJ
        inside = r > 1e-300
        safe = np.where(inside, r, 1.0)
        # J_b(kr) / r -> 0 at the origin for b >= 2
        vt = np.where(inside, -a * k * b * np.cos(phase) * J / safe, 0.0)
        c = np.where(inside, x / safe, 1.0)
        s = np.where(inside, y / safe, 0.0)
        return p, vr * c - vt * s, vr * s + vt * c

    def energy(self, nr: int = 400) -> float:
        """``1/2 int (p^2 + |v|^2)`` over the unit disk (time independent)."""
        q = legendre_gauss(nr)
        r = 0.5 * (q.nodes + 1.0)
        wr = 0.5 * q.weights
        a, b, k = self.amplitude, self.beta, self.R0
        J = bessel_j(b, k * r)
        dJ = bessel_j_prime(b, k * r)
        # theta averages of cos^2 and sin^2 both give pi
        dens = (a * k * k) ** 2 * (J ** 2 + dJ ** 2 + (b * J / (k * r)) ** 2)
        return 0.5 * np.pi * float(np.sum(wr * r * dens))


@dataclass(frozen=True)
class RingPulse:
    """Gaussian ring of pressure at rest: ``p = exp(-w (r - R)^2)``."""

    radius: float = 10.0
    width: float = 2.0

    def __call__(self, x, y, t=0.0):
        r = np.hypot(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        p = np.exp(-self.width * (r - self.radius) ** 2)
        z = np.zeros_like(p)
        return p, z, z
