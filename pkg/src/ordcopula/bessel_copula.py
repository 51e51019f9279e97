"""Bessel-function copula: an infinite mixture of order-n copulas.

The order n is drawn from a discrete Bessel distribution with parameter
theta.  With the I1 weights the density sums in closed form to

    c(u, v) = sqrt(theta) / I1(2 sqrt(theta))
              * I0(2 sqrt(theta u v)) * I0(2 sqrt(theta (1-u)(1-v))).

The distribution function has no closed form and is obtained by quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .copula_core import NEGATIVE, POSITIVE, SpecError, _check_orientation
from .quadrature import adaptive_2d, gl_nodes
from .specfun import (
    bessel_i,
    discrete_bessel_weights,
    log_bessel_i,
    orderstat_cdfs,
    orderstat_density_factors,
)

CDF_TOL = 1e-12


@dataclass(frozen=True)
class BesselCopulaSpec:
    theta: float
    variant: str = "I1"
    orientation: str = field(default=POSITIVE, kw_only=True)

    def __post_init__(self):
        _check_orientation(self.orientation)
        if not self.theta >= 0 or math.isinf(self.theta):
            raise SpecError(f"theta must be finite and >= 0, got {self.theta}")
        if self.variant not in ("I1", "I0"):
            raise SpecError(f"variant must be 'I1' or 'I0', got {self.variant!r}")

    @property
    def negative(self) -> bool:
        return self.orientation == NEGATIVE

    def pdf(self, u, v):
        return bessel_pdf(self, u, v)

    def cdf(self, u, v):
        return bessel_cdf(self, u, v)


def _log_pdf_positive(theta: float, variant: str, u, v):
    a = 2.0 * np.sqrt(theta * u * v)
    b = 2.0 * np.sqrt(theta * (1.0 - u) * (1.0 - v))
    z = 2.0 * math.sqrt(theta)
    la, lb = log_bessel_i(0, a), log_bessel_i(0, b)
    if variant == "I1":
        return 0.5 * math.log(theta) - log_bessel_i(1, z) + la + lb
    # A I1(2A)/I0(2A) with A = a/2, written with scaled functions
    ra = 0.5 * a * bessel_i(1, a, scaled=True) / bessel_i(0, a, scaled=True)
    rb = 0.5 * b * bessel_i(1, b, scaled=True) / bessel_i(0, b, scaled=True)
    return la + lb + np.log1p(ra + rb) - log_bessel_i(0, z)


def bessel_log_pdf(spec: BesselCopulaSpec, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u < 0) | (u > 1)) or np.any((v < 0) | (v > 1)):
        raise ValueError("copula arguments must lie in [0, 1]")
    if spec.negative:
        v = 1.0 - v
    u, v = np.broadcast_arrays(u, v)
    if spec.theta == 0.0:
        out = np.zeros(u.shape)
    else:
        out = np.asarray(_log_pdf_positive(spec.theta, spec.variant, u, v), dtype=float)
    return out[()] if out.ndim == 0 else out


def bessel_pdf(spec: BesselCopulaSpec, u, v):
    """Closed-form density; every Bessel factor is evaluated scaled."""
    out = np.exp(bessel_log_pdf(spec, u, v))
    return out[()] if np.ndim(out) == 0 else out


def mixture_weights(spec: BesselCopulaSpec, tail: float = 1e-12) -> np.ndarray:
    """w_1..w_N of the mixing law, truncated at cumulative mass 1 - tail."""
    return discrete_bessel_weights(spec.theta, spec.variant, tail)


def truncated_mixture_pdf(spec: BesselCopulaSpec, u, v, tail: float = 1e-12):
    """sum_n w_n c_n(u, v) with c_n the order-n density (series route)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if spec.negative:
        v = 1.0 - v
    w = mixture_weights(spec, tail)
    total = np.zeros(np.broadcast(u, v).shape)
    for n, wn in enumerate(w, start=1):
        total += wn * np.mean(
            orderstat_density_factors(u, n) * orderstat_density_factors(v, n), axis=-1
        )
    return total


def truncated_mixture_cdf(spec: BesselCopulaSpec, u, v, tail: float = 1e-14):
    """sum_n w_n C_n(u, v); independent of the quadrature route."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    neg = spec.negative
    vv = 1.0 - v if neg else v
    w = mixture_weights(spec, tail)
    total = np.zeros(np.broadcast(u, v).shape)
    for n, wn in enumerate(w, start=1):
        total += wn * np.mean(orderstat_cdfs(u, n) * orderstat_cdfs(vv, n), axis=-1)
    return u - total if neg else total


def _panel_function(spec: BesselCopulaSpec):
    pos = BesselCopulaSpec(spec.theta, spec.variant)
    return lambda U, V: bessel_pdf(pos, U, V)


def _cdf_positive(spec: BesselCopulaSpec, u: float, v: float, tol: float) -> float:
    if u <= 0.0 or v <= 0.0:
        return 0.0
    if spec.theta == 0.0:
        return u * v
    return adaptive_2d(_panel_function(spec), (0.0, u, 0.0, v), tol=tol)


def bessel_cdf(spec: BesselCopulaSpec, u, v, tol: float = CDF_TOL):
    """C(u, v) by adaptive tensor Gauss-Legendre over [0, u] x [0, v]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u < 0) | (u > 1)) or np.any((v < 0) | (v > 1)):
        raise ValueError("copula arguments must lie in [0, 1]")
    U, V = np.broadcast_arrays(u, v)
    out = np.empty(U.shape)
    for idx in np.ndindex(U.shape):
        a, b = float(U[idx]), float(V[idx])
        if spec.negative:
            out[idx] = a - _cdf_positive(spec, a, 1.0 - b, tol)
        else:
            out[idx] = _cdf_positive(spec, a, b, tol)
    return out[()] if out.ndim == 0 else out


def bessel_cdf_grid(spec: BesselCopulaSpec, us, vs, tol: float = CDF_TOL) -> np.ndarray:
    """C on the tensor grid us x vs (both increasing, starting at 0).

    Each grid cell is integrated separately and the cells are accumulated,
    so rectangle masses read back from the grid are nonnegative.
    """
    us = np.asarray(us, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if us[0] != 0.0 or vs[0] != 0.0 or np.any(np.diff(us) <= 0) or np.any(np.diff(vs) <= 0):
        raise ValueError("grid must be strictly increasing and start at 0")
    if spec.negative:
        # C^-(u, v) = u - C^+(u, 1 - v) needs the positive grid at 1 - v
        flipped = 1.0 - vs[::-1]
        if not np.allclose(flipped, vs, atol=0, rtol=0) and not np.allclose(flipped, vs, atol=1e-15):
            raise ValueError("negative orientation needs a grid symmetric about 1/2")
        pos = bessel_cdf_grid(BesselCopulaSpec(spec.theta, spec.variant), us, vs, tol)
        return us[:, None] - pos[:, ::-1]
    f = _panel_function(spec)
    cells = np.zeros((us.size - 1, vs.size - 1))
    if spec.theta == 0.0:
        cells = np.outer(np.diff(us), np.diff(vs))
    else:
        ntot = cells.size
        for i in range(us.size - 1):
            for j in range(vs.size - 1):
                cells[i, j] = adaptive_2d(f, (us[i], us[i + 1], vs[j], vs[j + 1]), tol=tol / ntot)
    grid = np.zeros((us.size, vs.size))
    grid[1:, 1:] = np.cumsum(np.cumsum(cells, axis=0), axis=1)
    return grid


def bessel_spearman(theta: float, variant: str = "I1") -> float:
    """Spearman's rho of the Bessel-mixture copula.

    I1: I3(2 sqrt t) / I1(2 sqrt t)
    I0: (2 t^(-1/2) I3(2 sqrt t) + I4(2 sqrt t)) / I0(2 sqrt t)
    DisplacedPoisson: 1 - 2/t + 2 (1 - e^(-t)) / t^2
    """
    if theta < 0:
        raise ValueError("theta must be >= 0")
    if theta == 0.0:
        return 0.0
    z = 2.0 * math.sqrt(theta)
    if variant == "I1":
        return float(bessel_i(3, z, scaled=True) / bessel_i(1, z, scaled=True))
    if variant == "I0":
        i0 = bessel_i(0, z, scaled=True)
        return float((2.0 / math.sqrt(theta) * bessel_i(3, z, scaled=True) + bessel_i(4, z, scaled=True)) / i0)
    if variant == "DisplacedPoisson":
        if theta < 1e-3:
            # series of E[m / (m + 2)], m ~ Poisson(theta), avoids cancellation
            return theta / 3.0 - theta**2 / 12.0 + theta**3 / 60.0
        return 1.0 - 2.0 / theta - 2.0 * math.expm1(-theta) / theta**2
    raise ValueError(f"unknown variant {variant!r}")


def spearman_mixture_oracle(theta: float, variant: str = "I1", tail: float = 1e-15) -> float:
    """sum_n w_n (n - 1)/(n + 1) over the truncated mixing law."""
    w = discrete_bessel_weights(theta, variant, tail)
    n = np.arange(1, w.size + 1)
    return float(np.sum(w * (n - 1) / (n + 1)))


def theta_from_spearman(rho: float, variant: str = "I1") -> float:
    """Invert the Spearman map by bracketing root search."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    if rho == 0.0:
        return 0.0
    hi = 1.0
    while bessel_spearman(hi, variant) < rho:
        hi *= 4.0
        if hi > 1e12:
            raise ValueError(f"rho={rho} too close to 1")
    return brentq(lambda t: bessel_spearman(t, variant) - rho, 0.0, hi, xtol=1e-12, rtol=1e-14)


def _saddle_parts(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    t = (np.sqrt(u) - np.sqrt(v)) ** 2 + (np.sqrt(1 - u) - np.sqrt(1 - v)) ** 2
    q = (u * (1 - u)) ** 0.25 * (v * (1 - v)) ** 0.25
    return t, q


def large_theta_pdf(theta: float, u, v):
    """Leading large-theta form of the I1 density.

    With I_nu(z) ~ e^z / sqrt(2 pi z) and T = (sqrt u - sqrt v)^2
    + (sqrt(1-u) - sqrt(1-v))^2 = 2 (1 - sqrt(uv) - sqrt((1-u)(1-v))):
        c ~ theta^(1/4) exp(-sqrt(theta) T) / (2 sqrt(pi) (u(1-u) v(1-v))^(1/4)).
    """
    t, q = _saddle_parts(u, v)
    return theta**0.25 * np.exp(-math.sqrt(theta) * t) / (2.0 * math.sqrt(math.pi) * q)


def large_theta_pdf_double_rate(theta: float, u, v):
    """The variant with theta^(-1/4) and exp(-2 sqrt(theta) T); it is off by
    sqrt(theta) on the diagonal and doubles the decay rate elsewhere."""
    t, q = _saddle_parts(u, v)
    return np.exp(-2.0 * math.sqrt(theta) * t) / (2.0 * math.sqrt(math.pi) * theta**0.25 * q)


@dataclass(frozen=True)
class AssociativityProbe:
    theta: float
    max_deviation: float
    argmax: tuple


def associativity_probe(theta: float, grid=None, variant: str = "I1", tol: float = 1e-11) -> AssociativityProbe:
    """max |C(u, C(v, w)) - C(C(u, v), w)| over grid^3."""
    if theta < 0:
        raise ValueError("theta must be >= 0")
    g = np.asarray([0.2, 0.4, 0.6, 0.8] if grid is None else grid, dtype=float)
    spec = BesselCopulaSpec(theta, variant)
    pair = {}

    def c(a, b):
        key = (a, b)
        if key not in pair:
            pair[key] = float(bessel_cdf(spec, a, b, tol=tol))
        return pair[key]

    best, arg = 0.0, (float(g[0]),) * 3
    for u in g:
        for v in g:
            for w in g:
                d = abs(c(float(u), c(float(v), float(w))) - c(c(float(u), float(v)), float(w)))
                if d > best:
                    best, arg = d, (float(u), float(v), float(w))
    return AssociativityProbe(float(theta), best, arg)


@lru_cache(maxsize=32)
def cumulative_weights(theta: float, variant: str = "I1") -> np.ndarray:
    """Cumulative mixing weights, cached per (theta, variant) for sampling."""
    w = discrete_bessel_weights(theta, variant, tail=1e-15)
    cum = np.cumsum(w)
    cum /= cum[-1]
    cum.setflags(write=False)
    return cum


def density_integral(spec: BesselCopulaSpec, panels: int = 8, m: int = 32) -> float:
    """Integral of the density over the unit square by composite tensor GL."""
    edges = np.linspace(0.0, 1.0, panels + 1)
    xs, ws = zip(*(gl_nodes(a, b, m) for a, b in zip(edges[:-1], edges[1:])))
    x, w = np.concatenate(xs), np.concatenate(ws)
    U, V = np.meshgrid(x, x, indexing="ij")
    return float(w @ bessel_pdf(spec, U, V) @ w)
