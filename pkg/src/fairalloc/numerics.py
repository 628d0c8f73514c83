"""Small deterministic optimization helpers shared across modules."""

from __future__ import annotations

import math

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0  # 1/phi^2


def golden_section_min(f, lo, hi, tol=1e-10, max_iter=200):
    """Minimize a unimodal scalar function on [lo, hi].

    Returns (argmin, min value). Exact for convex objectives; the interval
    is shrunk until its width falls below ``tol`` (absolute).
    """
    if hi < lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    a, b = lo, hi
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    yc = f(c)
    yd = f(d)
    for _ in range(max_iter):
        if h <= tol:
            break
        if yc < yd:
            b, d, yd = d, c, yc
            h = b - a
            c = a + _INVPHI2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = b - a
            d = a + _INVPHI * h
            yd = f(d)
    x = c if yc < yd else d
    y = min(yc, yd)
    # Endpoints can win when the minimizer sits on the boundary.
    for xe in (lo, hi):
        ye = f(xe)
        if ye < y:
            x, y = xe, ye
    return x, y


def golden_section_max(f, lo, hi, tol=1e-10, max_iter=200):
    x, y = golden_section_min(lambda t: -f(t), lo, hi, tol=tol, max_iter=max_iter)
    return x, -y


def ternary_max(f, lo, hi, tol=1e-10, max_iter=200):
    """Maximize a concave scalar function on [lo, hi] (alias of golden search)."""
    return golden_section_max(f, lo, hi, tol=tol, max_iter=max_iter)


def project_simplex(v):
    """Euclidean projection of ``v`` onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, n + 1) > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_ball(x, center, radius):
    """Euclidean projection of ``x`` onto the closed ball B(center, radius)."""
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    d = x - center
    nrm = float(np.linalg.norm(d))
    if nrm <= radius or nrm == 0.0:
        return x.copy()
    return center + d * (radius / nrm)


def central_diff_grad(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def one_sided_derivs(f, x, h=1e-7):
    """Forward/backward difference quotients of a scalar function at x.

    For a convex f these bracket the subdifferential [d_minus, d_plus]
    up to O(h) error.
    """
    fx = f(x)
    d_plus = (f(x + h) - fx) / h
    d_minus = (fx - f(x - h)) / h
    return d_minus, d_plus
