"""Quadrature rules for whole-space radial integrals.

Frequency-space integrals of isotropically sampled quantities are computed as

    Int_{R^n} F(xi) dxi = Int_0^inf r^{n-1} [ Int_{S^{n-1}} F(r w) dS(w) ] dr

with Gauss-Legendre nodes in log r on a truncated radial window and a fixed
sphere rule: the two points {+1, -1} in 1D (unit weights, so the "sphere
measure" is 2), a uniform 64-angle trapezoid rule in 2D (exact for
trigonometric polynomials up to degree 63), and in 3D the classical 26-point
degree-7 design built from cube vertices, edge midpoints and face centers.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "log_radial_rule",
    "sphere_rule",
    "sphere_design_26",
    "random_directions",
]

RADIAL_WINDOW = (1e-4, 20.0)


def log_radial_rule(m: int, window: tuple[float, float] = RADIAL_WINDOW):
    """Nodes r_i and weights W_i with sum_i W_i f(r_i) ~ Int f(r) dr.

    Gauss-Legendre on u = log r; the substitution weight e^u = r is folded
    into W.  The window default spans the low-frequency scales that control
    algebraic decay up to the fast tail cut by the Gaussian data profile.
    """
    lo, hi = window
    if not (0 < lo < hi):
        raise ValueError("radial window must satisfy 0 < lo < hi")
    u, wu = leggauss(m)
    mid = 0.5 * (np.log(hi) + np.log(lo))
    half = 0.5 * (np.log(hi) - np.log(lo))
    r = np.exp(mid + half * u)
    return r, wu * half * r


def sphere_design_26():
    """Degree-7 26-point rule on S^2: directions and weights summing to 4 pi.

    Point classes and normalized weights: 6 axis points at 1/21, 12 edge
    midpoints at 4/105, 8 cube corners at 27/840.  Exactness through degree
    7 is pinned by the monomial averages x^2 -> 1/3, x^4 -> 1/5,
    x^2 y^2 -> 1/15, x^6 -> 1/7, x^4 y^2 -> 1/35, x^2 y^2 z^2 -> 1/105.
    """
    pts = []
    wts = []
    for axis in range(3):
        for s in (+1.0, -1.0):
            p = np.zeros(3)
            p[axis] = s
            pts.append(p)
            wts.append(1.0 / 21.0)
    for a in range(3):
        for b in range(a + 1, 3):
            for sa in (+1.0, -1.0):
                for sb in (+1.0, -1.0):
                    p = np.zeros(3)
                    p[a], p[b] = sa, sb
                    pts.append(p / np.sqrt(2.0))
                    wts.append(4.0 / 105.0)
    for sx in (+1.0, -1.0):
        for sy in (+1.0, -1.0):
            for sz in (+1.0, -1.0):
                pts.append(np.array([sx, sy, sz]) / np.sqrt(3.0))
                wts.append(27.0 / 840.0)
    return np.asarray(pts), 4.0 * np.pi * np.asarray(wts)


def sphere_rule(n: int):
    """Directions and weights with sum(weights) = |S^{n-1}|."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        m = 64
        theta = 2.0 * np.pi * np.arange(m) / m
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return pts, np.full(m, 2.0 * np.pi / m)
    if n == 3:
        return sphere_design_26()
    raise ValueError("n must be 1, 2 or 3")


def random_directions(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform unit vectors, used to cross-check the fixed sphere rules."""
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)
