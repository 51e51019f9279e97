"""Gauss-Legendre rules: fixed tensor products and adaptive panel splitting."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _leggauss(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_nodes(a: float, b: float, m: int = 32):
    """Nodes and weights of the m-point rule on [a, b]."""
    x, w = _leggauss(m)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_nodes(a: float, b: float, panels: int, m: int = 32):
    edges = np.linspace(a, b, panels + 1)
    xs, ws = zip(*(gl_nodes(lo, hi, m) for lo, hi in zip(edges[:-1], edges[1:])))
    return np.concatenate(xs), np.concatenate(ws)


def tensor_integrate(f, m: int = 64, box=(0.0, 1.0, 0.0, 1.0), panels: int = 1) -> float:
    """Integral of f(u, v) over a rectangle with a tensor Gauss-Legendre rule."""
    ua, ub, va, vb = box
    xu, wu = composite_nodes(ua, ub, panels, m)
    xv, wv = composite_nodes(va, vb, panels, m)
    U, V = np.meshgrid(xu, xv, indexing="ij")
    return float(wu @ np.asarray(f(U, V)) @ wv)


def adaptive_1d(f, a: float, b: float, tol: float = 1e-12, m: int = 32, max_depth: int = 30) -> float:
    """Adaptive bisection with an m-point rule; f must accept arrays."""

    def panel(lo, hi):
        x, w = gl_nodes(lo, hi, m)
        return float(w @ f(x))

    def rec(lo, hi, whole, depth):
        mid = 0.5 * (lo + hi)
        left, right = panel(lo, mid), panel(mid, hi)
        if depth >= max_depth or abs(left + right - whole) <= max(tol, 1e-15 * abs(whole)):
            return left + right
        return rec(lo, mid, left, depth + 1) + rec(mid, hi, right, depth + 1)

    if b <= a:
        return 0.0
    return rec(a, b, panel(a, b), 0)


def adaptive_2d(f, box, tol: float = 1e-12, m: int = 32, max_depth: int = 12) -> float:
    """Integral of f(U, V) over box = (u0, u1, v0, v1) by quadtree refinement.

    A panel is accepted when its own tensor estimate agrees with the sum of
    its four children to ``tol`` (scaled down with depth so the total error
    stays near ``tol``).
    """
    x, w = _leggauss(m)

    def panel(u0, u1, v0, v1):
        hu, hv = 0.5 * (u1 - u0), 0.5 * (v1 - v0)
        U = u0 + hu * (x + 1.0)
        V = v0 + hv * (x + 1.0)
        vals = np.asarray(f(U[:, None], V[None, :]))
        return float(hu * hv * (w @ vals @ w))

    u0, u1, v0, v1 = box
    if u1 <= u0 or v1 <= v0:
        return 0.0
    total = 0.0
    stack = [(u0, u1, v0, v1, panel(u0, u1, v0, v1), 0)]
    while stack:
        a0, a1, b0, b1, whole, depth = stack.pop()
        am, bm = 0.5 * (a0 + a1), 0.5 * (b0 + b1)
        kids = [
            (a0, am, b0, bm),
            (a0, am, bm, b1),
            (am, a1, b0, bm),
            (am, a1, bm, b1),
        ]
        vals = [panel(*k) for k in kids]
        s = sum(vals)
        local = tol * 0.25**depth
        if depth >= max_depth or abs(s - whole) <= max(local, 1e-15 * abs(s)):
            total += s
        else:
            stack.extend((*k, v, depth + 1) for k, v in zip(kids, vals))
    return total
