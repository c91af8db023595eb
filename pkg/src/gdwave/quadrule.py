"""One-dimensional quadrature and Lagrange interpolation building blocks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Quad1d:
    """Quadrature rule on [-1, 1].

    ``strength`` is the largest polynomial degree integrated exactly.
    """

    nodes: np.ndarray
    weights: np.ndarray
    strength: int

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.nodes)

    def mapped(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights of the rule affinely mapped to [a, b]."""
        half = 0.5 * (b - a)
        return a + half * (self.nodes + 1.0), half * self.weights


def _legendre_and_derivative(n: int, x: np.ndarray):
    p0 = np.ones_like(x)
    if n == 0:
        return p0, np.zeros_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def legendre_gauss(npoints: int) -> Quad1d:
    """``npoints``-point Legendre-Gauss rule by Newton iteration."""
    if npoints < 1:
        raise ValueError(f"npoints must be >= 1, got {npoints}")
    n = npoints
    if n == 1:
        return Quad1d(np.array([0.0]), np.array([2.0]), 1)

    k = np.arange(1, n + 1)
    # Chebyshev-like initial guesses, descending
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)

    x = x[::-1].copy()
    w = w[::-1].copy()
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return Quad1d(x, w, 2 * n - 1)


def chebyshev2_nodes(npoints: int) -> np.ndarray:
    """Chebyshev points of the second kind, ascending, endpoints included."""
    if npoints < 2:
        raise ValueError(f"npoints must be >= 2, got {npoints}")
    k = np.arange(npoints - 1, -1, -1)
    x = np.cos(np.pi * k / (npoints - 1))
    x = 0.5 * (x - x[::-1])
    return x


def clenshaw_curtis_weights(npoints: int) -> np.ndarray:
    """Quadrature weights for :func:`chebyshev2_nodes` (Clenshaw-Curtis)."""
    n = npoints - 1
    theta = np.pi * np.arange(n, -1, -1) / n
    w = np.zeros(npoints)
    for j in range(npoints):
        s = 0.0
        for k in range(1, n // 2 + 1):
            b = 1.0 if 2 * k == n else 2.0
            s += b / (4 * k * k - 1) * np.cos(2 * k * theta[j])
        c = 1.0 if j in (0, n) else 2.0
        w[j] = c / n * (1.0 - s)
    return w


def _check_distinct(nodes: np.ndarray):
    nodes = np.asarray(nodes, dtype=float)
    scale = max(1.0, float(np.max(np.abs(nodes)))) if nodes.size else 1.0
    diff = np.abs(nodes[:, None] - nodes[None, :])
    np.fill_diagonal(diff, np.inf)
    if nodes.size > 1 and diff.min() <= 1e-13 * scale:
        raise ValueError("interpolation nodes are not distinct")


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=float)
    _check_distinct(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_interp_matrix(source, target) -> np.ndarray:
    """Matrix ``A`` with ``A[i, j] = l_j(target[i])`` (barycentric form)."""
    source = np.asarray(source, dtype=float)
    target = np.atleast_1d(np.asarray(target, dtype=float))
    w = barycentric_weights(source)

    diff = target[:, None] - source[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    a = w[None, :] / diff
    a /= a.sum(axis=1, keepdims=True)

    rows = np.any(exact, axis=1)
    a[rows] = exact[rows].astype(float)
    return a


def lagrange_diff_matrix(nodes) -> np.ndarray:
    """Differentiation matrix on ``nodes`` (exact for degree < len(nodes))."""
    nodes = np.asarray(nodes, dtype=float)
    w = barycentric_weights(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    # negative-sum trick keeps row sums at zero
    np.fill_diagonal(d, -d.sum(axis=1))
    return d


def lagrange_deriv_matrix(source, target) -> np.ndarray:
    """Derivative of the Lagrange interpolant on ``source`` evaluated at ``target``.

    Interpolates to a Gauss grid of the same size and differentiates there.
    """
    source = np.asarray(source, dtype=float)
    lo, hi = source.min(), source.max()
    q = legendre_gauss(len(source))
    aux = lo + 0.5 * (hi - lo) * (q.nodes + 1.0)
    to_aux = lagrange_interp_matrix(source, aux)
    d_aux = lagrange_diff_matrix(aux)
    return lagrange_interp_matrix(aux, target) @ d_aux @ to_aux
