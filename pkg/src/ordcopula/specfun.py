"""Special functions and order-statistic building blocks.

Everything here is vectorised over the probability / argument and pure.
Order-statistic quantities are evaluated through Bernstein polynomials in
log space so that orders of a few hundred stay finite.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, log_ndtr, ndtr, xlog1py, xlogy

_SMALL_N = 20
_BESSEL_SWITCH = 80.0
_PHI_TAIL = 7.0
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def log_binom(n, k):
    """log C(n, k), exact for n <= 20."""
    n = np.asarray(n)
    k = np.asarray(k)
    if n.ndim == 0 and k.ndim == 0 and int(n) <= _SMALL_N:
        return math.log(math.comb(int(n), int(k)))
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def log_factorial(n):
    n = np.asarray(n, dtype=float)
    return gammaln(n + 1.0)


def _check_order(k: int, n: int) -> None:
    if n < 1 or k < 1 or k > n:
        raise ValueError(f"order statistic index out of range: k={k}, n={n}")


def bernstein_basis(u, n: int) -> np.ndarray:
    """B_{j,n}(u) for j = 0..n, stacked on a trailing axis.

    0**0 is taken as 1 so the basis is defined on the closed interval.
    """
    if n < 0:
        raise ValueError(f"degree must be nonnegative, got {n}")
    u = np.asarray(u, dtype=float)[..., None]
    j = np.arange(n + 1, dtype=float)
    logc = gammaln(n + 1.0) - gammaln(j + 1.0) - gammaln(n - j + 1.0)
    return np.exp(logc + xlogy(j, u) + xlog1py(n - j, -u))


def orderstat_cdfs(u, n: int) -> np.ndarray:
    """Q_{k,n}(u) for k = 1..n on a trailing axis."""
    _check_order(1, n)
    b = bernstein_basis(u, n)
    tail = np.cumsum(b[..., ::-1], axis=-1)[..., ::-1][..., 1:]
    # above 1/2 the complement of the head sum keeps full relative accuracy
    head = 1.0 - np.cumsum(b, axis=-1)[..., :-1]
    return np.clip(np.where(tail > 0.5, head, tail), 0.0, 1.0)


def orderstat_density_factors(u, n: int) -> np.ndarray:
    """f_{k,n}/f at F = u for k = 1..n, i.e. n * B_{k-1,n-1}(u)."""
    _check_order(1, n)
    return n * bernstein_basis(u, n - 1)


def orderstat_cdf(u, k: int, n: int):
    """Distribution function of the k-th of n order statistics of a uniform.

    >>> float(orderstat_cdf(0.5, 1, 2))
    0.75
    """
    _check_order(k, n)
    _check_unit(u)
    return orderstat_cdfs(u, n)[..., k - 1]


def orderstat_density_factor(u, k: int, n: int):
    """n C(n-1, k-1) u^(k-1) (1-u)^(n-k)."""
    _check_order(k, n)
    _check_unit(u)
    return orderstat_density_factors(u, n)[..., k - 1]


def _check_unit(u) -> None:
    u = np.asarray(u, dtype=float)
    if np.any((u < 0.0) | (u > 1.0)) or np.any(np.isnan(u)):
        raise ValueError("probability argument outside [0, 1]")


# ---------------------------------------------------------------------------
# Modified Bessel functions of the first kind, integer order


def _bessel_series(order: int, z: np.ndarray) -> np.ndarray:
    half = z / 2.0
    term = half**order / math.factorial(order)
    total = term.copy()
    q = half * half
    m = 0
    while True:
        m += 1
        term = term * q / (m * (m + order))
        total += term
        if not np.any(term > 1e-17 * total):
            break
    return total


def _bessel_asymptotic_scaled(order: int, z: np.ndarray) -> np.ndarray:
    mu = 4.0 * order * order
    term = np.ones_like(z)
    total = term.copy()
    prev = np.full_like(z, np.inf)
    for k in range(1, 60):
        term = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        mag = np.abs(term)
        grow = mag >= prev
        term = np.where(grow, 0.0, term)
        total += term
        prev = np.where(grow, 0.0, mag)
        if not np.any(np.abs(term) > 1e-17 * np.abs(total)):
            break
    return total / np.sqrt(2.0 * np.pi * z)


def bessel_i(order: int, z, scaled: bool = False):
    """Modified Bessel function I_order(z) for integer order 0..4, z >= 0.

    The power series is summed for z <= 80 and the Hankel expansion is used
    above.  With ``scaled=True`` returns exp(-z) I_order(z), which never
    overflows.
    """
    if order not in (0, 1, 2, 3, 4):
        raise ValueError(f"unsupported Bessel order {order}")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise ValueError("bessel_i requires z >= 0")
    if not scaled and np.any(z > 709.0):
        raise OverflowError("I_nu(z) overflows for z > 709; use scaled=True")
    flat = np.atleast_1d(z).ravel()
    out = np.empty_like(flat)
    small = flat <= _BESSEL_SWITCH
    if np.any(small):
        zs = flat[small]
        s = _bessel_series(order, zs)
        out[small] = s * np.exp(-zs) if scaled else s
    if np.any(~small):
        zl = flat[~small]
        a = _bessel_asymptotic_scaled(order, zl)
        out[~small] = a if scaled else a * np.exp(zl)
    out = out.reshape(z.shape)
    return out[()] if out.ndim == 0 else out


def log_bessel_i(order: int, z):
    """log I_order(z), computed from the scaled function."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(bessel_i(order, z, scaled=True)) + z


# ---------------------------------------------------------------------------
# Normal distribution function


def mills_ratio_tail(z):
    """Phi(z) / phi(z) for z << 0 from the asymptotic series.

    Summation stops at the smallest term, which for z <= -7 leaves a relative
    error below 1e-10.
    """
    z = np.asarray(z, dtype=float)
    x2 = 1.0 / (z * z)
    term = -1.0 / z
    total = term.copy()
    prev = np.abs(term)
    for k in range(1, 200):
        nxt = -term * (2 * k - 1) * x2
        mag = np.abs(nxt)
        keep = mag < prev
        nxt = np.where(keep, nxt, 0.0)
        total += nxt
        term = np.where(keep, nxt, 0.0)
        prev = np.where(keep, mag, 0.0)
        if not np.any(np.abs(term) > 1e-17 * np.abs(total)):
            break
    return total


def _as_flat(z):
    z = np.asarray(z, dtype=float)
    return z, np.atleast_1d(z).ravel()


def _restore(out, shape):
    out = out.reshape(shape)
    return out[()] if out.ndim == 0 else out


def normal_cdf(z):
    """Standard normal distribution function with asymptotic deep tails."""
    z, flat = _as_flat(z)
    out = ndtr(flat)
    lo = flat < -_PHI_TAIL
    hi = flat > _PHI_TAIL
    if np.any(lo):
        zl = flat[lo]
        out[lo] = np.exp(-0.5 * zl * zl - _LOG_SQRT_2PI) * mills_ratio_tail(zl)
    if np.any(hi):
        zh = -flat[hi]
        out[hi] = 1.0 - np.exp(-0.5 * zh * zh - _LOG_SQRT_2PI) * mills_ratio_tail(zh)
    return _restore(out, z.shape)


def log_normal_cdf(z):
    z, flat = _as_flat(z)
    out = log_ndtr(flat)
    lo = flat < -_PHI_TAIL
    if np.any(lo):
        zl = flat[lo]
        out[lo] = -0.5 * zl * zl - _LOG_SQRT_2PI + np.log(mills_ratio_tail(zl))
    return _restore(out, z.shape)


def normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * z * z - _LOG_SQRT_2PI)


def log_exp_times_phi(shift, z, gauss_exponent):
    """log(exp(shift) * Phi(z)) without forming huge and tiny factors.

    ``gauss_exponent`` must equal ``shift - z**2 / 2`` algebraically; the
    caller supplies it in a cancellation-free form.  In the deep left tail
    Phi(z) = phi(z) R(z), so the product collapses to
    exp(gauss_exponent) R(z) / sqrt(2 pi).
    """
    shift, z, gauss_exponent = np.broadcast_arrays(
        np.asarray(shift, float), np.asarray(z, float), np.asarray(gauss_exponent, float)
    )
    out = np.empty(shift.shape)
    tail = z < -_PHI_TAIL
    body = ~tail
    out[body] = shift[body] + log_ndtr(z[body])
    if np.any(tail):
        out[tail] = gauss_exponent[tail] - _LOG_SQRT_2PI + np.log(mills_ratio_tail(z[tail]))
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Discrete Bessel mixing distribution

VARIANTS = ("I1", "I0")


def log_discrete_bessel_pmf(n, theta: float, variant: str = "I1"):
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ValueError("discrete Bessel support starts at n = 1")
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if theta == 0.0:
        return np.where(n == 1, 0.0, -np.inf)
    z = 2.0 * math.sqrt(theta)
    lt = math.log(theta)
    if variant == "I1":
        return (n - 0.5) * lt - gammaln(n) - gammaln(n + 1.0) - log_bessel_i(1, z)
    if variant == "I0":
        return (n - 1.0) * lt - 2.0 * gammaln(n) - log_bessel_i(0, z)
    raise ValueError(f"unknown weight variant {variant!r}")


def discrete_bessel_pmf(n, theta: float, variant: str = "I1"):
    """Mixing weights over the order n (n >= 1).

    I1: theta^(n-1/2) / ((n-1)! n! I1(2 sqrt theta))
    I0: theta^(n-1) / ((n-1)!^2 I0(2 sqrt theta))
    """
    out = np.exp(log_discrete_bessel_pmf(n, theta, variant))
    return out[()] if np.ndim(out) == 0 else out


def discrete_bessel_weights(theta: float, variant: str = "I1", tail: float = 1e-12):
    """Weights w_1..w_N, truncated once the cumulative mass exceeds 1 - tail
    and the terms have fallen below 1e-18."""
    if theta == 0.0:
        return np.array([1.0])
    # the mode sits near sqrt(theta); scan well past it
    nmax = int(max(40, 4 * math.sqrt(theta) + 60))
    w = discrete_bessel_pmf(np.arange(1, nmax + 1), theta, variant)
    # the summed pmf carries rounding of order 1e-14, so the stopping rule
    # watches the tail terms and truncation is relative to the computed total
    while w[-1] > 1e-18 and nmax < 1 << 24:
        nmax *= 2
        w = discrete_bessel_pmf(np.arange(1, nmax + 1), theta, variant)
    cum = np.cumsum(w)
    last = int(np.searchsorted(cum, (1.0 - tail) * cum[-1])) + 1
    small = np.nonzero(w[last:] < 1e-18)[0]
    stop = last + (int(small[0]) if small.size else w.size - last)
    return w[: max(stop, 1)]
