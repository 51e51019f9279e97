import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ordcopula.copula_core import (
    ASYMMETRIC_CYCLE,
    NEGATIVE,
    DoublyStochasticMatrix,
    FiniteMixture,
    General,
    Independence,
    Mixture,
    OrderN,
    Permutation,
    RangePaired,
    SpecError,
    canonical_matrix,
    copula_cdf,
    copula_pdf,
    elevation_matrix,
    exchange_symmetry_residual,
    hazard_tail_ratio,
    lrd_check,
    make_spec,
    matrix_cdf,
    matrix_pdf,
    median_density,
    radial_symmetry_residual,
    random_quadruples,
    random_walk_identity_check,
    validate_spec,
)
from ordcopula.quadrature import tensor_integrate

FAMILIES = [
    Independence(),
    OrderN(1),
    OrderN(2),
    OrderN(7),
    Mixture(10, 0.78),
    Mixture(3, 0.0),
    RangePaired(6, 2, 1),
    RangePaired(8, 2, 2),
    FiniteMixture((0.2, 0.3, 0.5)),
    Permutation((3, 1, 4, 2)),
    ASYMMETRIC_CYCLE,
    General(DoublyStochasticMatrix(np.array([[0.3, 0.2], [0.2, 0.3]]))),
    OrderN(5, orientation=NEGATIVE),
    Mixture(4, 0.6, orientation=NEGATIVE),
    FiniteMixture((0.5, 0.0, 0.5), orientation=NEGATIVE),
]
IDS = [repr(f) for f in FAMILIES]
GRID = np.linspace(0, 1, 21)


# validation and canonical forms -------------------------------------------


def test_mixture_canonical_matrix():
    r = canonical_matrix(Mixture(3, 0.5)).r
    expected = (1 - 0.5) / 9 + (0.5 / 3) * np.eye(3)
    np.testing.assert_allclose(r, expected, atol=1e-15)


def test_bad_row_sum_reports_indices():
    with pytest.raises(SpecError, match="row 0"):
        DoublyStochasticMatrix(np.array([[0.3, 0.1], [0.2, 0.4]]))


def test_negative_entry_rejected():
    with pytest.raises(SpecError, match=r"r\[0\]\[1\]"):
        DoublyStochasticMatrix(np.array([[0.6, -0.1], [-0.1, 0.6]]))


def test_permutation_canonical():
    r = canonical_matrix(Permutation((2, 3, 1))).r
    expected = np.zeros((3, 3))
    for i, s in enumerate((2, 3, 1)):
        expected[i, s - 1] = 1 / 3
    np.testing.assert_array_equal(r, expected)


@pytest.mark.parametrize(
    "bad",
    [
        lambda: Mixture(3, 1.5),
        lambda: OrderN(0),
        lambda: RangePaired(4, 2, 2),
        lambda: FiniteMixture((0.5, 0.6)),
        lambda: FiniteMixture((1.2, -0.2)),
        lambda: Permutation((1, 1, 2)),
        lambda: Independence(orientation="sideways"),
    ],
)
def test_invalid_specs(bad):
    with pytest.raises(SpecError):
        validate_spec(bad())


def test_elevation_matrix_is_degree_elevation():
    # order-statistic cdfs of degree m re-expressed at degree n
    from ordcopula.specfun import orderstat_cdfs

    m, n = 3, 7
    P = elevation_matrix(m, n)
    u = np.linspace(0, 1, 11)
    np.testing.assert_allclose(orderstat_cdfs(u, n) @ P.T, orderstat_cdfs(u, m), atol=1e-14)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-14)


@pytest.mark.parametrize("spec", FAMILIES, ids=IDS)
def test_fast_path_equals_matrix_path(spec):
    U, V = np.meshgrid(GRID, GRID, indexing="ij")
    r = canonical_matrix(spec).r
    np.testing.assert_allclose(copula_cdf(spec, U, V), matrix_cdf(r, U, V), atol=1e-12)
    np.testing.assert_allclose(copula_pdf(spec, U, V), matrix_pdf(r, U, V), atol=1e-10, rtol=1e-12)


def test_range_paired_block_structure():
    r = canonical_matrix(RangePaired(6, 2, 1)).r * 6
    assert r[0, 0] == 1 and r[1, 1] == 1 and r[5, 5] == 1
    np.testing.assert_allclose(r[2:5, 2:5], np.full((3, 3), 1 / 3))
    assert r[0, 1] == 0 and r[5, 2] == 0


def test_finite_mixture_matches_component_sum():
    w = (0.1, 0.0, 0.4, 0.5)
    spec = FiniteMixture(w)
    U, V = np.meshgrid(GRID, GRID, indexing="ij")
    direct = sum(wi * copula_cdf(OrderN(i), U, V) for i, wi in enumerate(w, 1))
    np.testing.assert_allclose(spec.cdf(U, V), direct, atol=1e-13)


def test_make_spec_names():
    assert make_spec("order-n", n=3) == OrderN(3)
    assert make_spec("mixture", n=3, q=0.2) == Mixture(3, 0.2)
    assert make_spec("permutation", sigma=[2, 3, 1]) == ASYMMETRIC_CYCLE
    with pytest.raises(SpecError):
        make_spec("mixture", n=3)
    with pytest.raises(SpecError):
        make_spec("clayton")


# cdf and pdf values ---------------------------------------------------------


def test_small_values():
    assert copula_cdf(OrderN(1), 0.3, 0.8) == pytest.approx(0.24)
    assert copula_cdf(OrderN(2), 0.5, 0.5) == pytest.approx(0.3125, abs=1e-15)
    assert copula_cdf(Mixture(10, 0.78), 0.37, 1.0) == pytest.approx(0.37, abs=1e-15)
    assert copula_pdf(Independence(), 0.3, 0.9) == 1.0
    assert copula_pdf(OrderN(2), 0.5, 0.5) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 6, 10, 25])
def test_median_density(n):
    expected = 0.25 ** (n - 1) * n * math.comb(2 * n - 2, n - 1)
    assert median_density(n) == pytest.approx(expected, rel=1e-13)
    assert copula_pdf(OrderN(n), 0.5, 0.5) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 4, 9, 15])
@pytest.mark.parametrize("uv", [(0.3, 0.6), (0.1, 0.9), (0.77, 0.72)])
def test_order_n_density_hypergeometric(n, uv):
    u, v = uv
    z = (1 - u) * (1 - v) / (u * v)
    ref = n * (u * v) ** (n - 1) * mpmath.hyp2f1(1 - n, 1 - n, 1, z)
    assert copula_pdf(OrderN(n), u, v) == pytest.approx(float(ref), rel=1e-11)


# structural invariants ---------------------------------------------------------


@pytest.mark.parametrize("spec", FAMILIES, ids=IDS)
def test_boundary_conditions(spec):
    u = np.linspace(0, 1, 101)
    z, o = np.zeros_like(u), np.ones_like(u)
    assert np.max(np.abs(spec.cdf(u, z))) <= 1e-12
    assert np.max(np.abs(spec.cdf(z, u))) <= 1e-12
    assert np.max(np.abs(spec.cdf(u, o) - u)) <= 1e-12
    assert np.max(np.abs(spec.cdf(o, u) - u)) <= 1e-12


@pytest.mark.parametrize("spec", FAMILIES, ids=IDS)
def test_two_increasing(spec):
    U, V = np.meshgrid(GRID, GRID, indexing="ij")
    C = spec.cdf(U, V)
    # every rectangle is a sum of grid cells, so cell masses suffice
    cells = C[1:, 1:] - C[:-1, 1:] - C[1:, :-1] + C[:-1, :-1]
    assert cells.min() >= -1e-12


@pytest.mark.parametrize("spec", FAMILIES, ids=IDS)
def test_density_normalised(spec):
    assert tensor_integrate(spec.pdf, 64) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("spec", FAMILIES, ids=IDS)
def test_mixed_partial_matches_density(spec):
    h = 1e-4
    pts = np.linspace(0.15, 0.85, 6)
    U, V = np.meshgrid(pts, pts, indexing="ij")
    fd = (spec.cdf(U + h, V + h) - spec.cdf(U + h, V - h) - spec.cdf(U - h, V + h) + spec.cdf(U - h, V - h)) / (4 * h * h)
    assert np.max(np.abs(fd - spec.pdf(U, V))) < 1e-4 * max(1.0, np.max(spec.pdf(U, V)))


@pytest.mark.parametrize("spec", [OrderN(n) for n in (1, 3, 10)] + [Mixture(6, 0.4)], ids=repr)
def test_pqd(spec):
    U, V = np.meshgrid(GRID, GRID, indexing="ij")
    assert np.min(spec.cdf(U, V) - U * V) >= -1e-14


def test_negative_orientation_reflection():
    pos, neg = OrderN(5), OrderN(5, orientation=NEGATIVE)
    U, V = np.meshgrid(GRID, GRID, indexing="ij")
    np.testing.assert_allclose(neg.cdf(U, V), U - pos.cdf(U, 1 - V), atol=1e-15)
    np.testing.assert_allclose(neg.pdf(U, V), pos.pdf(U, 1 - V), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_mixture_is_convex_combination(n, q, u, v):
    c = copula_cdf(Mixture(n, q), u, v)
    assert c == pytest.approx((1 - q) * u * v + q * copula_cdf(OrderN(n), u, v), abs=1e-14)
    assert max(u + v - 1, 0) - 1e-14 <= c <= min(u, v) + 1e-14


# LRD -------------------------------------------------------------------------


@pytest.mark.parametrize("spec", [OrderN(5), OrderN(12), Mixture(5, 1.0), Independence()], ids=repr)
def test_lrd_holds(spec):
    rep = lrd_check(spec, random_quadruples(10_000, seed=3))
    assert rep.minimum >= -1e-12
    assert rep.holds


def _order_n_density_mp(n, u, v):
    t = lambda x, k: n * mpmath.binomial(n - 1, k - 1) * x ** (k - 1) * (1 - x) ** (n - k)
    return sum(t(u, k) * t(v, k) for k in range(1, n + 1)) / n


@pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
def test_mixture_with_independence_is_not_lrd(q):
    # near independence the determinant is q (c11 + c22 - c12 - c21) to first
    # order, and the order-n density is not supermodular
    rep = lrd_check(Mixture(5, q), random_quadruples(10_000, seed=3))
    assert rep.minimum < -1e-3
    with mpmath.workdps(30):
        u1, v1, u2, v2 = (mpmath.mpf(x) for x in rep.argmin)
        c = lambda u, v: (1 - q) + q * _order_n_density_mp(5, u, v)
        det = c(u1, v1) * c(u2, v2) - c(u1, v2) * c(u2, v1)
    assert float(det) == pytest.approx(rep.minimum, rel=1e-10)


def test_independence_lrd_is_zero():
    assert lrd_check(Independence(), random_quadruples(100, 0)).minimum == 0.0


def test_asymmetric_cycle_not_lrd():
    rep = lrd_check(ASYMMETRIC_CYCLE, random_quadruples(10_000, seed=3))
    assert rep.minimum < 0 and not rep.holds


def test_lrd_rejects_unordered():
    with pytest.raises(ValueError):
        lrd_check(OrderN(2), np.array([[0.5, 0.2, 0.4, 0.3]]))


# symmetries ------------------------------------------------------------------------


@pytest.mark.parametrize("spec", [Independence(), OrderN(4), Mixture(7, 0.3), FiniteMixture((0.2, 0.3, 0.5)),
                                  RangePaired(8, 2, 2)], ids=repr)
def test_radial_symmetry(spec):
    assert radial_symmetry_residual(spec) <= 1e-10


def test_independence_radial_exact():
    assert radial_symmetry_residual(Independence()) <= 2.3e-16


def test_asymmetric_cycle_breaks_exchange_symmetry():
    assert exchange_symmetry_residual(ASYMMETRIC_CYCLE) > 0.01
    assert radial_symmetry_residual(RangePaired(6, 2, 1)) > 1e-3


def test_brute_force_pairing_oracle():
    # explicit enumeration of the pairing mechanism at n = 3
    spec = ASYMMETRIC_CYCLE
    r = canonical_matrix(spec).r
    u, v = 0.35, 0.6
    from scipy.stats import binom

    Q = lambda t, k: 1 - binom.cdf(k - 1, 3, t)
    direct = sum(r[i, j] * Q(u, i + 1) * Q(v, j + 1) for i, j in itertools.product(range(3), range(3)))
    assert spec.cdf(u, v) == pytest.approx(direct, abs=1e-14)


# hazard and random-walk identities ----------------------------------------------


def test_lower_tail_hazard():
    h = hazard_tail_ratio(Mixture(5, 0.5), 1e-4, 1e-4)
    assert h.exact == pytest.approx(3.0, rel=0.01)
    assert hazard_tail_ratio(Mixture(5, 0.0), 1e-4, 1e-4).exact == pytest.approx(1.0, rel=1e-3)


def test_upper_tail_hazard_asymptote():
    h = hazard_tail_ratio(Mixture(3, 1.0), 1 - 1e-4, 1 - 1e-4)
    assert h.exact == pytest.approx(h.upper_asymptote, rel=0.01)
    # the alternative (nq + 1 - q) / (q (2 - u - v)) form is far off here
    assert abs(h.upper_asymptote_linear / h.exact - 1) > 0.5


def test_random_walk_identity():
    assert random_walk_identity_check(1, 0.3, 0.8).walk_value == pytest.approx(1.0)
    assert random_walk_identity_check(1, 0.3, 0.8).density == pytest.approx(1.0)
    assert random_walk_identity_check(3, 0.2, 0.7).residual <= 1e-10
    for n in (2, 5, 9):
        chk = random_walk_identity_check(n, 0.5, 0.5)
        assert chk.density == pytest.approx(median_density(n), rel=1e-12)
        assert chk.residual <= 1e-10
        assert chk.alt_prefactor_value / chk.walk_value == pytest.approx(2 / (n * (2 * n - 1)), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_random_walk_identity_property(n, u, v):
    chk = random_walk_identity_check(n, u, v)
    assert chk.residual <= 1e-10 * max(1.0, chk.density)
