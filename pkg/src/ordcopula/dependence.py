"""Measures of association for the finite and Bessel copula families.

Closed forms are used where they exist; quadrature is the authority and
each closed form has a numerical twin for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel_copula import BesselCopulaSpec, bessel_cdf, bessel_pdf, bessel_spearman
from .copula_core import (
    FiniteMixture,
    Independence,
    Mixture,
    OrderN,
    canonical_matrix,
)
from .quadrature import adaptive_1d, composite_nodes, tensor_integrate

CLOSED_FORM = "closed_form"
QUADRATURE = "quadrature"
MONTE_CARLO = "monte_carlo"


def _sign(spec) -> float:
    return -1.0 if spec.negative else 1.0


def _finite_order(spec) -> int | None:
    if isinstance(spec, BesselCopulaSpec):
        return None
    return canonical_matrix(spec).n


def _tensor_rule(spec):
    """(panels, nodes) for tensor quadrature; exact for polynomial copulas."""
    n = _finite_order(spec)
    if n is not None and 2 * n <= 127:
        return 1, 64
    if n is not None:
        return int(math.ceil(2 * n / 64)), 64
    return 8, 32


# ---------------------------------------------------------------------------
# Spearman


def spearman_rho(spec) -> float:
    if isinstance(spec, BesselCopulaSpec):
        return _sign(spec) * bessel_spearman(spec.theta, spec.variant)
    s = _sign(spec)
    if isinstance(spec, Independence):
        return 0.0
    if isinstance(spec, OrderN):
        return s * (spec.n - 1) / (spec.n + 1)
    if isinstance(spec, Mixture):
        return s * spec.q * (spec.n - 1) / (spec.n + 1)
    if isinstance(spec, FiniteMixture):
        return s * sum(w * (i - 1) / (i + 1) for i, w in enumerate(spec.weights, 1))
    # General carries its orientation inside the matrix
    return matrix_spearman(canonical_matrix(spec).r)


def matrix_spearman(r: np.ndarray) -> float:
    """12 / (n+1)^2 * sum_ij i j r_ij - 3, in the centred form."""
    n = r.shape[0]
    c = np.arange(1, n + 1) - (n + 1) / 2.0
    return float(12.0 / (n + 1) ** 2 * (c @ r @ c))


def range_paired_spearman(n: int, m1: int, m2: int) -> float:
    """(n-1)/(n+1) - L (L^2 - 1) / (n (n+1)^2) with L = n - m1 - m2.

    The unpaired middle block replaces sum i^2 over its L ranks by
    (sum i)^2 / L, a loss of L (L^2 - 1) / 12.
    """
    L = n - m1 - m2
    return (n - 1) / (n + 1) - L * (L * L - 1) / (n * (n + 1) ** 2)


def range_paired_spearman_three_term(n: int, m1: int, m2: int) -> float:
    """Three-term expression that disagrees with the matrix value once m1 + m2 > 0; kept for comparison."""
    d = n * (n + 1) ** 2
    return (
        (n - 1) / (n + 1)
        + (2 * m1 * (m1 + 1) * (2 * m1 + 1) - 2 * (n - m2 - 1) * (n - m2) * (2 * n - 2 * m2 - 1)) / d
        + 3 * (n + m1 - m2 - 1) ** 2 * (n - m1 - m2) / d
    )


def spearman_rho_numeric(spec) -> float:
    """12 * int int C - 3 by quadrature.

    For the Bessel copula the integral of C is written as
    E[(1 - U)(1 - V)] so only the density is needed.
    """
    panels, m = _tensor_rule(spec)
    if isinstance(spec, BesselCopulaSpec):
        val = tensor_integrate(lambda U, V: (1 - U) * (1 - V) * bessel_pdf(spec, U, V), m, panels=panels)
    else:
        val = tensor_integrate(spec.cdf, m, panels=panels)
    return 12.0 * val - 3.0


def schweizer_wolff(spec) -> float:
    """12 * int int |C - uv|."""
    panels, m = _tensor_rule(spec)
    if isinstance(spec, BesselCopulaSpec):
        x, w = composite_nodes(0.0, 1.0, 1, 24)
        C = _bessel_cdf_at_nodes(spec, x)
        return 12.0 * float(w @ np.abs(C - np.outer(x, x)) @ w)
    return 12.0 * tensor_integrate(lambda U, V: np.abs(spec.cdf(U, V) - U * V), m, panels=panels)


def _bessel_cdf_at_nodes(spec, x):
    C = np.empty((x.size, x.size))
    for i, a in enumerate(x):
        for j, b in enumerate(x[: i + 1]):
            C[i, j] = C[j, i] = float(bessel_cdf(spec, a, b, tol=1e-11))
    return C


# ---------------------------------------------------------------------------
# Blomqvist


def blomqvist_beta(spec) -> float:
    """4 C(1/2, 1/2) - 1."""
    return float(4.0 * spec.cdf(0.5, 0.5) - 1.0)


def blomqvist_closed_form(n: int, form: int = 1) -> float:
    """Order-n Blomqvist beta from either of two binomial sums.

    form 1: (4/n) 2^(-2n) sum_k (sum_{i>=k} C(n,i))^2 - 1
    form 2: 2^(2-2n) {C(2n-1, n-1) + 2 sum_i C(n-1,i-1) sum_{j>i} C(n,j)} - 1
    Exact integer arithmetic throughout.
    """
    from fractions import Fraction

    if n < 1:
        raise ValueError("n must be >= 1")
    if form == 1:
        s = sum(sum(math.comb(n, i) for i in range(k, n + 1)) ** 2 for k in range(1, n + 1))
        return float(Fraction(4 * s, n * 4**n) - 1)
    if form == 2:
        inner = sum(
            math.comb(n - 1, i - 1) * sum(math.comb(n, j) for j in range(i + 1, n + 1))
            for i in range(1, n + 1)
        )
        return float(Fraction(math.comb(2 * n - 1, n - 1) + 2 * inner, 4 ** (n - 1)) - 1)
    raise ValueError("form must be 1 or 2")


# ---------------------------------------------------------------------------
# Gini


def gini_gamma(spec, tol: float = 1e-12) -> float:
    """4 int_0^1 {C(u, u) + C(u, 1 - u)} du - 2 by adaptive quadrature."""
    if isinstance(spec, BesselCopulaSpec):
        f = lambda t: np.array([float(bessel_cdf(spec, a, a, tol=1e-12)) + float(bessel_cdf(spec, a, 1 - a, tol=1e-12)) for a in t])
        val = adaptive_1d(f, 0.0, 1.0, tol=1e-9, m=16)
    else:
        val = adaptive_1d(lambda t: spec.cdf(t, t) + spec.cdf(t, 1.0 - t), 0.0, 1.0, tol=tol)
    return 4.0 * val - 2.0


def gini_closed_form(n: int, start: int = 1) -> float:
    """Double binomial sum for the order-n Gini gamma.

    4 / (n (2n+1)) sum_{i,j} (min(i, j) + min(i, n - j)) C(n,i) C(n,j) / C(2n, i+j) - 2

    With the indices starting at 1 the value disagrees with the definition
    (for n = 1 it is -2/3, not 0).  Starting at 0 reproduces the quadrature
    value for every n.
    """
    from fractions import Fraction

    if n < 1:
        raise ValueError("n must be >= 1")
    s = sum(
        Fraction((min(i, j) + min(i, n - j)) * math.comb(n, i) * math.comb(n, j), math.comb(2 * n, i + j))
        for i in range(start, n + 1)
        for j in range(start, n + 1)
    )
    return float(Fraction(4, n * (2 * n + 1)) * s - 2)


@dataclass(frozen=True)
class GiniComparison:
    n: int
    quadrature: float
    one_based: float
    discrepancy: float


def gini_comparison(n: int) -> GiniComparison:
    """Quadrature Gini for OrderN(n) next to the one-based closed-form sum."""
    quad = gini_gamma(OrderN(n))
    one_based = gini_closed_form(n, start=1)
    return GiniComparison(n, quad, one_based, one_based - quad)


# ---------------------------------------------------------------------------
# Kendall


def kendall_tau_numeric(spec) -> float:
    """Kendall's tau by tensor quadrature.

    Finite families: 4 int int C c - 1.  Bessel: 1 - 4 int int C_u C_v,
    with the partial derivatives obtained as one-dimensional integrals of
    the density.
    """
    if isinstance(spec, BesselCopulaSpec):
        return _kendall_bessel(spec)
    panels, m = _tensor_rule(spec)
    return 4.0 * tensor_integrate(lambda U, V: spec.cdf(U, V) * spec.pdf(U, V), m, panels=panels) - 1.0


def _partial_grid(pdf, x, m: int = 32):
    """int_0^{x_j} pdf(x_i, z) dz on the node grid, accumulated between nodes."""
    edges = np.concatenate([[0.0], x])
    out = np.zeros((x.size, x.size))
    for j in range(x.size):
        z, wz = composite_nodes(edges[j], edges[j + 1], 1, m)
        out[:, j] = pdf(x[:, None], z[None, :]) @ wz
    return np.cumsum(out, axis=1)


def _kendall_bessel(spec, panels: int = 8, m: int = 32) -> float:
    x, w = composite_nodes(0.0, 1.0, panels, m)
    cu = _partial_grid(lambda a, b: bessel_pdf(spec, a, b), x)
    cv = _partial_grid(lambda a, b: bessel_pdf(spec, b, a), x).T
    return 1.0 - 4.0 * float(w @ (cu * cv) @ w)


def kendall_tau_monte_carlo(spec, draws: int = 1_000_000, seed: int = 0):
    """Concordance-probability estimate and its standard error."""
    from .sampling import sample_copula

    a = sample_copula(spec, draws, seed)
    b = sample_copula(spec, draws, seed + 1)
    s = np.sign((a[:, 0] - b[:, 0]) * (a[:, 1] - b[:, 1]))
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(draws))


# ---------------------------------------------------------------------------
# tails and reports


def tail_dependence_estimate(spec, ps) -> np.ndarray:
    """C(p, p) / p for each p; tends to the lower tail coefficient as p -> 0."""
    ps = np.asarray(ps, dtype=float)
    if np.any(ps <= 0) or np.any(ps > 1):
        raise ValueError("p values must lie in (0, 1]")
    vals = np.array([float(spec.cdf(p, p)) for p in ps])
    return vals / ps


@dataclass(frozen=True)
class AssociationReport:
    spearman: float
    kendall: float
    blomqvist: float
    gini: float
    tail_lambda: float
    tail_witness: float
    methods: dict

    def as_dict(self) -> dict:
        return {
            "spearman": self.spearman,
            "kendall": self.kendall,
            "blomqvist": self.blomqvist,
            "gini": self.gini,
            "tail_lambda": self.tail_lambda,
            "tail_witness": self.tail_witness,
        }


TAIL_WITNESS_P = 1e-6


def association_report(spec) -> AssociationReport:
    """All measures for one spec.

    Every family here has bounded density, so C(p, p) <= c_max p^2 and the
    tail coefficient is exactly 0.  tail_witness is C(p, p)/p at p = 1e-6.
    """
    methods = {
        "spearman": CLOSED_FORM,
        "kendall": QUADRATURE,
        "blomqvist": QUADRATURE if isinstance(spec, BesselCopulaSpec) else CLOSED_FORM,
        "gini": QUADRATURE,
        "tail_lambda": CLOSED_FORM,
    }
    return AssociationReport(
        spearman_rho(spec),
        kendall_tau_numeric(spec),
        blomqvist_beta(spec),
        gini_gamma(spec),
        0.0,
        float(tail_dependence_estimate(spec, [TAIL_WITNESS_P])[0]),
        methods,
    )


def association_curve(n_max: int):
    """Rows (n, rho_s, tau, beta, gamma) for OrderN(n), n = 1..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    rows = []
    for n in range(1, n_max + 1):
        spec = OrderN(n)
        rows.append(
            (n, spearman_rho(spec), kendall_tau_numeric(spec), blomqvist_beta(spec), gini_gamma(spec))
        )
    return rows
