"""Finite-order copulas built by pairing order statistics.

Every family here is a special case of the general pairing model

    C(u, v) = sum_ij r_ij Q_i(u) Q_j(v),

where Q_i is the distribution function of the i-th of n uniform order
statistics and n*r is doubly stochastic.  Family-specific formulas are fast
paths; ``canonical_matrix`` gives the reference r for every family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln

from .specfun import orderstat_cdfs, orderstat_density_factors

POSITIVE = "positive"
NEGATIVE = "negative"

_ROW_TOL = 1e-10


class SpecError(ValueError):
    """A copula specification violates one of its constraints."""


def _check_orientation(orientation: str) -> None:
    if orientation not in (POSITIVE, NEGATIVE):
        raise SpecError(f"orientation must be {POSITIVE!r} or {NEGATIVE!r}, got {orientation!r}")


@dataclass(frozen=True, eq=False)
class DoublyStochasticMatrix:
    """Pairing probabilities r_ij; rows and columns each sum to 1/n."""

    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] < 1:
            raise SpecError(f"pairing matrix must be square, got shape {r.shape}")
        n = r.shape[0]
        bad = np.argwhere(r < 0)
        if bad.size:
            i, j = bad[0]
            raise SpecError(f"negative entry r[{i}][{j}] = {r[i, j]}")
        for axis, name in ((1, "row"), (0, "column")):
            sums = r.sum(axis=axis)
            off = np.nonzero(np.abs(sums - 1.0 / n) > _ROW_TOL)[0]
            if off.size:
                k = off[0]
                raise SpecError(f"{name} {k} sums to {sums[k]:.12g}, expected 1/n = {1.0 / n:.12g}")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return self.r.shape[0]


@dataclass(frozen=True)
class _Family:
    orientation: str = field(default=POSITIVE, kw_only=True)

    def __post_init__(self):
        _check_orientation(self.orientation)

    @property
    def negative(self) -> bool:
        return self.orientation == NEGATIVE

    def cdf(self, u, v):
        return copula_cdf(self, u, v)

    def pdf(self, u, v):
        return copula_pdf(self, u, v)


@dataclass(frozen=True)
class Independence(_Family):
    pass


@dataclass(frozen=True)
class OrderN(_Family):
    n: int

    def __post_init__(self):
        super().__post_init__()
        if int(self.n) != self.n or self.n < 1:
            raise SpecError(f"order n must be a positive integer, got {self.n}")


@dataclass(frozen=True)
class Mixture(_Family):
    """(1 - q) * independence + q * order-n copula."""

    n: int
    q: float

    def __post_init__(self):
        super().__post_init__()
        if int(self.n) != self.n or self.n < 1:
            raise SpecError(f"order n must be a positive integer, got {self.n}")
        if not 0.0 <= self.q <= 1.0:
            raise SpecError(f"mixing weight q must lie in [0, 1], got {self.q}")


@dataclass(frozen=True, eq=False)
class General(_Family):
    matrix: DoublyStochasticMatrix

    def __post_init__(self):
        super().__post_init__()
        if not isinstance(self.matrix, DoublyStochasticMatrix):
            object.__setattr__(self, "matrix", DoublyStochasticMatrix(self.matrix))


@dataclass(frozen=True)
class RangePaired(_Family):
    """Bottom m1 and top m2 order statistics pair; the middle block mixes freely."""

    n: int
    m1: int
    m2: int

    def __post_init__(self):
        super().__post_init__()
        if self.n < 1 or self.m1 < 0 or self.m2 < 0:
            raise SpecError(f"need n >= 1 and m1, m2 >= 0, got n={self.n}, m1={self.m1}, m2={self.m2}")
        if self.m1 + self.m2 >= self.n:
            raise SpecError(f"m1 + m2 must be < n, got {self.m1} + {self.m2} >= {self.n}")


@dataclass(frozen=True)
class FiniteMixture(_Family):
    """sum_i w_i * (order-i copula), i = 1..len(weights)."""

    weights: tuple

    def __post_init__(self):
        super().__post_init__()
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise SpecError("finite mixture needs at least one weight")
        neg = [i for i, x in enumerate(w) if x < 0]
        if neg:
            raise SpecError(f"weight w_{neg[0] + 1} = {w[neg[0]]} is negative")
        if abs(sum(w) - 1.0) > 1e-10:
            raise SpecError(f"weights sum to {sum(w):.12g}, expected 1")


@dataclass(frozen=True)
class Permutation(_Family):
    """X's i-th order statistic pairs with Y's sigma(i)-th (1-based)."""

    sigma: tuple

    def __post_init__(self):
        super().__post_init__()
        s = tuple(int(x) for x in self.sigma)
        object.__setattr__(self, "sigma", s)
        if sorted(s) != list(range(1, len(s) + 1)):
            raise SpecError(f"sigma must be a permutation of 1..{len(s)}, got {s}")

    @property
    def n(self) -> int:
        return len(self.sigma)


CopulaSpec = Union[Independence, OrderN, Mixture, General, RangePaired, FiniteMixture, Permutation]

# the asymmetric 3-cycle: Q1 with Q2, Q2 with Q3, Q3 with Q1
ASYMMETRIC_CYCLE = Permutation((2, 3, 1))


# ---------------------------------------------------------------------------
# canonical pairing matrices


def elevation_matrix(m: int, n: int) -> np.ndarray:
    """P[k, i] with Q_{k+1,m} = sum_i P[k, i] Q_{i+1,n}, for m <= n.

    The k-th of m order statistics of a random m-subset of n draws is the
    I-th of the n, with a hypergeometric-type law for I.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    k = np.arange(1, m + 1)[:, None]
    i = np.arange(1, n + 1)[None, :]
    valid = (i >= k) & (n - i >= m - k)
    with np.errstate(invalid="ignore"):
        logp = (
            _lchoose(i - 1, k - 1) + _lchoose(n - i, m - k) - _lchoose(np.array(n), np.array(m))
        )
    return np.where(valid, np.exp(np.where(valid, logp, 0.0)), 0.0)


def _lchoose(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)


def _order_n_matrix(m: int, n: int) -> np.ndarray:
    """Order-m copula written at order n >= m."""
    if m == n:
        return np.eye(n) / n
    p = elevation_matrix(m, n)
    return p.T @ p / m


def canonical_matrix(spec: CopulaSpec) -> DoublyStochasticMatrix:
    """Reference pairing matrix, orientation included."""
    if isinstance(spec, Independence):
        r = np.ones((1, 1))
    elif isinstance(spec, OrderN):
        r = np.eye(spec.n) / spec.n
    elif isinstance(spec, Mixture):
        n, q = spec.n, spec.q
        r = (1.0 - q) / n**2 + (q / n) * np.eye(n)
    elif isinstance(spec, General):
        r = np.array(spec.matrix.r)
    elif isinstance(spec, RangePaired):
        n, m1, m2 = spec.n, spec.m1, spec.m2
        r = np.zeros((n, n))
        for i in list(range(m1)) + list(range(n - m2, n)):
            r[i, i] = 1.0 / n
        r[m1 : n - m2, m1 : n - m2] = 1.0 / (n * (n - m1 - m2))
    elif isinstance(spec, FiniteMixture):
        n = len(spec.weights)
        r = sum(w * _order_n_matrix(i, n) for i, w in enumerate(spec.weights, start=1) if w > 0)
    elif isinstance(spec, Permutation):
        n = spec.n
        r = np.zeros((n, n))
        r[np.arange(n), np.array(spec.sigma) - 1] = 1.0 / n
    else:
        raise SpecError(f"not a finite copula spec: {spec!r}")
    if spec.negative:
        r = r[:, ::-1]
    return DoublyStochasticMatrix(r)


def validate_spec(spec: CopulaSpec) -> DoublyStochasticMatrix:
    """Re-check a spec and return its canonical pairing matrix.

    Family constraints are enforced on construction; this also confirms the
    materialised matrix has the right margins.
    """
    type(spec).__post_init__(spec)
    return canonical_matrix(spec)


# ---------------------------------------------------------------------------
# evaluation


def _uv(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u < 0) | (u > 1)) or np.any((v < 0) | (v > 1)):
        raise ValueError("copula arguments must lie in [0, 1]")
    return np.broadcast_arrays(u, v)


def _order_n_cdf(n: int, u, v):
    return np.mean(orderstat_cdfs(u, n) * orderstat_cdfs(v, n), axis=-1)


def _order_n_pdf(n: int, u, v):
    return np.mean(orderstat_density_factors(u, n) * orderstat_density_factors(v, n), axis=-1)


def matrix_cdf(r: np.ndarray, u, v):
    n = r.shape[0]
    return np.einsum("...i,ij,...j->...", orderstat_cdfs(u, n), r, orderstat_cdfs(v, n))


def matrix_pdf(r: np.ndarray, u, v):
    n = r.shape[0]
    return np.einsum(
        "...i,ij,...j->...", orderstat_density_factors(u, n), r, orderstat_density_factors(v, n)
    )


def _positive_cdf(spec: CopulaSpec, u, v):
    if isinstance(spec, Independence):
        return u * v
    if isinstance(spec, OrderN):
        return _order_n_cdf(spec.n, u, v)
    if isinstance(spec, Mixture):
        return (1.0 - spec.q) * u * v + spec.q * _order_n_cdf(spec.n, u, v)
    if isinstance(spec, FiniteMixture):
        return sum(w * _order_n_cdf(i, u, v) for i, w in enumerate(spec.weights, 1) if w > 0)
    if isinstance(spec, Permutation):
        n = spec.n
        qv = orderstat_cdfs(v, n)[..., np.array(spec.sigma) - 1]
        return np.mean(orderstat_cdfs(u, n) * qv, axis=-1)
    return matrix_cdf(canonical_matrix(spec).r, u, v)


def _positive_pdf(spec: CopulaSpec, u, v):
    if isinstance(spec, Independence):
        return np.ones_like(u)
    if isinstance(spec, OrderN):
        return _order_n_pdf(spec.n, u, v)
    if isinstance(spec, Mixture):
        return (1.0 - spec.q) + spec.q * _order_n_pdf(spec.n, u, v)
    if isinstance(spec, FiniteMixture):
        return sum(w * _order_n_pdf(i, u, v) for i, w in enumerate(spec.weights, 1) if w > 0)
    if isinstance(spec, Permutation):
        n = spec.n
        dv = orderstat_density_factors(v, n)[..., np.array(spec.sigma) - 1]
        return np.mean(orderstat_density_factors(u, n) * dv, axis=-1)
    return matrix_pdf(canonical_matrix(spec).r, u, v)


def copula_cdf(spec: CopulaSpec, u, v):
    """C(u, v).  Negative orientation is C(u, v) -> u - C(u, 1 - v)."""
    u, v = _uv(u, v)
    if isinstance(spec, General):
        out = matrix_cdf(canonical_matrix(spec).r, u, v)
    elif spec.negative:
        out = u - _positive_cdf(spec, u, 1.0 - v)
    else:
        out = _positive_cdf(spec, u, v)
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


def copula_pdf(spec: CopulaSpec, u, v):
    """Copula density c(u, v) = d2 C / du dv."""
    u, v = _uv(u, v)
    if isinstance(spec, General):
        out = matrix_pdf(canonical_matrix(spec).r, u, v)
    elif spec.negative:
        out = _positive_pdf(spec, u, 1.0 - v)
    else:
        out = _positive_pdf(spec, u, v)
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


def median_density(n: int) -> float:
    """Order-n density at u = v = 1/2: (1/2)^(2(n-1)) n C(2n-2, n-1)."""
    return math.exp(-(2 * (n - 1)) * math.log(2.0) + math.log(n) + _lchoose(np.array(2 * n - 2), np.array(n - 1)))


# ---------------------------------------------------------------------------
# structural checks


@dataclass(frozen=True)
class LRDReport:
    minimum: float
    argmin: tuple
    count: int

    @property
    def holds(self) -> bool:
        return self.minimum >= -1e-12


def random_quadruples(count: int, seed: int = 0) -> np.ndarray:
    """Rows (u1, v1, u2, v2) with u1 < u2 and v1 < v2, uniform on the open square."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(size=(count, 2))
    b = rng.uniform(size=(count, 2))
    u1, u2 = np.minimum(a[:, 0], a[:, 1]), np.maximum(a[:, 0], a[:, 1])
    v1, v2 = np.minimum(b[:, 0], b[:, 1]), np.maximum(b[:, 0], b[:, 1])
    return np.column_stack([u1, v1, u2, v2])


def lrd_check(spec, quadruples) -> LRDReport:
    """Minimum of c(u1,v1) c(u2,v2) - c(u1,v2) c(u2,v1) over the quadruples.

    Works for any object with a vectorised ``pdf(u, v)``.
    """
    q = np.asarray(quadruples, dtype=float)
    u1, v1, u2, v2 = q.T
    if np.any(u2 <= u1) or np.any(v2 <= v1):
        raise ValueError("quadruples need u2 > u1 and v2 > v1")
    det = spec.pdf(u1, v1) * spec.pdf(u2, v2) - spec.pdf(u1, v2) * spec.pdf(u2, v1)
    k = int(np.argmin(det))
    return LRDReport(float(det[k]), tuple(float(x) for x in q[k]), len(det))


def _grid(grid):
    if grid is None:
        grid = np.linspace(0.0, 1.0, 21)
    g = np.asarray(grid, dtype=float)
    return np.meshgrid(g, g, indexing="ij")


def radial_symmetry_residual(spec, grid=None) -> float:
    """max |C(1-u, 1-v) - (1 - u - v + C(u, v))| over a square grid."""
    U, V = _grid(grid)
    lhs = spec.cdf(1.0 - U, 1.0 - V)
    rhs = 1.0 - U - V + spec.cdf(U, V)
    return float(np.max(np.abs(lhs - rhs)))


def exchange_symmetry_residual(spec, grid=None) -> float:
    """max |C(v, u) - C(u, v)| over a square grid."""
    U, V = _grid(grid)
    return float(np.max(np.abs(spec.cdf(V, U) - spec.cdf(U, V))))


@dataclass(frozen=True)
class HazardTail:
    exact: float
    lower_asymptote: float
    upper_asymptote_linear: float
    upper_asymptote: float


def hazard_tail_ratio(spec: Mixture, u: float, v: float) -> HazardTail:
    """Bivariate hazard c / S with uniform margins and its tail asymptotes.

    S(u, v) = 1 - u - v + C(u, v) is the joint survival function.  As
    u, v -> 0 the hazard tends to (1 - q) + n q.  Near (1, 1) the exact
    behaviour is 1 / ((1 - u)(1 - v)): by radial symmetry S(u, v) equals
    C(1 - u, 1 - v), whose leading term is c(0, 0)(1 - u)(1 - v), and
    c(1, 1) = c(0, 0).  The expression (nq + 1 - q) / (q (2 - u - v)) is
    also returned for comparison; it does not track the exact hazard.
    """
    if not isinstance(spec, Mixture) or spec.negative:
        raise SpecError("hazard tail forms are defined for positively oriented Mixture specs")
    n, q = spec.n, spec.q
    c = float(copula_pdf(spec, u, v))
    a, b = 1.0 - u, 1.0 - v
    surv = 1.0 - u - v + float(copula_cdf(spec, u, v))
    level = (1.0 - q) + n * q
    linear = level / (q * (a + b)) if q > 0 else math.inf
    return HazardTail(c / surv, level, linear, 1.0 / (a * b))


def random_walk_return(m: int, p1: float, p2: float, q1: float, q2: float) -> float:
    """Probability that the lattice walk is back at the origin after 2m steps."""
    k = np.arange(m + 1)
    logt = (
        gammaln(2 * m + 1.0)
        - 2 * gammaln(k + 1.0)
        - 2 * gammaln(m - k + 1.0)
    )
    with np.errstate(divide="ignore"):
        logt = logt + k * np.log(p1 * p2) + (m - k) * np.log(q1 * q2)
    return float(np.sum(np.exp(logt)))


@dataclass(frozen=True)
class RandomWalkCheck:
    density: float
    walk_value: float
    residual: float
    alt_prefactor_value: float


def random_walk_identity_check(n: int, u: float, v: float) -> RandomWalkCheck:
    """Order-n density against the planar random-walk return probability.

    With p1 = u/2, p2 = v/2, q1 = (1-u)/2, q2 = (1-v)/2,
    c(u, v) = n 4^(n-1) / C(2n-2, n-1) * p00(2n-2).
    ``alt_prefactor_value`` uses the prefactor 2^(2n) n! (n-1)! / (2n)! instead,
    which is off by 2 / (n (2n - 1)).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    c = float(_order_n_pdf(n, np.asarray(u, float), np.asarray(v, float)))
    p00 = random_walk_return(n - 1, u / 2, v / 2, (1 - u) / 2, (1 - v) / 2)
    m = n - 1
    pref = math.exp(math.log(n) + m * math.log(4.0) - _lchoose(np.array(2 * m), np.array(m)))
    alt = math.exp(
        2 * n * math.log(2.0) + gammaln(n + 1.0) + gammaln(n) - gammaln(2 * n + 1.0)
    )
    walk = pref * p00
    return RandomWalkCheck(c, walk, abs(c - walk), alt * p00)


def spec_order(spec: CopulaSpec) -> int:
    return canonical_matrix(spec).n


def make_spec(family: str, *, n: int | None = None, q: float | None = None,
              matrix: Sequence[Sequence[float]] | None = None, m1: int = 0, m2: int = 0,
              weights: Sequence[float] | None = None, sigma: Sequence[int] | None = None,
              orientation: str = POSITIVE) -> CopulaSpec:
    """Build a finite spec from a family name (as used on the command line)."""
    family = family.replace("_", "-").lower()
    if family == "independence":
        return Independence(orientation=orientation)
    if family == "order-n":
        return OrderN(_need(n, "n"), orientation=orientation)
    if family == "mixture":
        return Mixture(_need(n, "n"), _need(q, "q"), orientation=orientation)
    if family == "general":
        return General(DoublyStochasticMatrix(np.asarray(_need(matrix, "matrix"))), orientation=orientation)
    if family == "range-paired":
        return RangePaired(_need(n, "n"), m1, m2, orientation=orientation)
    if family == "finite-mixture":
        return FiniteMixture(tuple(_need(weights, "weights")), orientation=orientation)
    if family == "permutation":
        return Permutation(tuple(_need(sigma, "sigma")), orientation=orientation)
    raise SpecError(f"unknown copula family {family!r}")


def _need(value, name):
    if value is None:
        raise SpecError(f"parameter {name!r} is required for this family")
    return value
