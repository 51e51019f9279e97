from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ordcopula.bessel_copula import BesselCopulaSpec, bessel_spearman
from ordcopula.copula_core import (
    ASYMMETRIC_CYCLE,
    NEGATIVE,
    DoublyStochasticMatrix,
    FiniteMixture,
    General,
    Independence,
    Mixture,
    OrderN,
    RangePaired,
    canonical_matrix,
)
from ordcopula.dependence import (
    association_curve,
    association_report,
    blomqvist_beta,
    blomqvist_closed_form,
    gini_closed_form,
    gini_comparison,
    gini_gamma,
    kendall_tau_monte_carlo,
    kendall_tau_numeric,
    matrix_spearman,
    range_paired_spearman,
    range_paired_spearman_three_term,
    schweizer_wolff,
    spearman_rho,
    spearman_rho_numeric,
    tail_dependence_estimate,
)

FINITE = [
    Independence(),
    OrderN(1),
    OrderN(3),
    OrderN(10),
    Mixture(10, 0.78),
    Mixture(4, 0.3, orientation=NEGATIVE),
    RangePaired(6, 2, 1),
    RangePaired(9, 0, 3),
    FiniteMixture((0.1, 0.2, 0.3, 0.4)),
    ASYMMETRIC_CYCLE,
]


def _brute_spearman(r):
    # 12 / (n+1)^2 sum_ij i j r_ij - 3 with 1-based ranks, literally
    n = r.shape[0]
    s = sum((i + 1) * (j + 1) * r[i, j] for i in range(n) for j in range(n))
    return 12.0 / (n + 1) ** 2 * s - 3.0


# Spearman ----------------------------------------------------------------------


def test_spearman_values():
    assert spearman_rho(OrderN(1)) == 0.0
    assert spearman_rho(Mixture(10, 0.78)) == pytest.approx(0.78 * 9 / 11, abs=1e-15)
    assert round(spearman_rho(Mixture(10, 0.78)), 2) == 0.64
    g = General(DoublyStochasticMatrix(canonical_matrix(Mixture(3, 0.5)).r))
    assert spearman_rho(g) == pytest.approx(0.25, abs=1e-14)


@pytest.mark.parametrize("spec", FINITE, ids=repr)
def test_spearman_closed_form_vs_quadrature(spec):
    assert spearman_rho(spec) == pytest.approx(spearman_rho_numeric(spec), abs=1e-10)
    assert matrix_spearman(canonical_matrix(spec).r) == pytest.approx(_brute_spearman(canonical_matrix(spec).r), abs=1e-12)


def test_range_paired_closed_form():
    for n, m1, m2 in [(6, 2, 1), (8, 2, 2), (10, 3, 0), (5, 1, 1), (12, 0, 5)]:
        spec = RangePaired(n, m1, m2)
        assert range_paired_spearman(n, m1, m2) == pytest.approx(spearman_rho(spec), abs=1e-14)


def test_range_paired_three_term_form_disagrees():
    assert range_paired_spearman_three_term(10, 0, 0) == pytest.approx(0.0, abs=1e-14)
    assert abs(range_paired_spearman_three_term(6, 2, 1) - spearman_rho(RangePaired(6, 2, 1))) > 0.1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=8).filter(lambda w: sum(w) > 0.1))
def test_finite_mixture_spearman_is_weighted(w):
    w = tuple(x / sum(w) for x in w)
    w = w[:-1] + (1.0 - sum(w[:-1]),) if w[-1] > 1e-9 else w
    spec = FiniteMixture(w)
    assert spearman_rho(spec) == pytest.approx(_brute_spearman(canonical_matrix(spec).r), abs=1e-10)


@pytest.mark.parametrize("spec", [OrderN(4), Mixture(6, 0.5), FiniteMixture((0.3, 0.0, 0.7))], ids=repr)
def test_measures_odd_under_orientation_flip(spec):
    neg = type(spec)(**{**spec.__dict__, "orientation": NEGATIVE})
    assert spearman_rho(neg) == pytest.approx(-spearman_rho(spec), abs=1e-14)
    assert kendall_tau_numeric(neg) == pytest.approx(-kendall_tau_numeric(spec), abs=1e-12)
    assert blomqvist_beta(neg) == pytest.approx(-blomqvist_beta(spec), abs=1e-14)
    assert gini_gamma(neg) == pytest.approx(-gini_gamma(spec), abs=1e-10)


@pytest.mark.parametrize("spec", [OrderN(3), OrderN(10), Mixture(8, 0.4)], ids=repr)
def test_schweizer_wolff_equals_spearman_for_pqd(spec):
    assert schweizer_wolff(spec) == pytest.approx(spearman_rho(spec), abs=1e-4)


def test_bessel_spearman_dispatch():
    spec = BesselCopulaSpec(23.7)
    assert spearman_rho(spec) == bessel_spearman(23.7)
    assert spearman_rho_numeric(spec) == pytest.approx(bessel_spearman(23.7), abs=1e-8)


# Blomqvist ------------------------------------------------------------------------


def test_blomqvist_values():
    assert blomqvist_beta(OrderN(1)) == 0.0
    assert blomqvist_beta(OrderN(2)) == 0.25
    assert blomqvist_beta(Mixture(2, 0.5)) == pytest.approx(0.125, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 7, 15, 40])
def test_blomqvist_closed_forms(n):
    direct = blomqvist_beta(OrderN(n))
    assert blomqvist_closed_form(n, 1) == pytest.approx(direct, abs=1e-13)
    assert blomqvist_closed_form(n, 2) == pytest.approx(direct, abs=1e-13)
    assert blomqvist_beta(Mixture(n, 0.3)) == pytest.approx(0.3 * direct, abs=1e-14)


# Gini -------------------------------------------------------------------------------


def test_gini_independence():
    assert gini_gamma(Independence()) == pytest.approx(0.0, abs=1e-8)
    assert gini_gamma(OrderN(1)) == pytest.approx(0.0, abs=1e-8)


def test_gini_one_based_sum_discrepancy():
    assert gini_closed_form(1, start=1) == pytest.approx(-2 / 3, abs=1e-15)
    cmp = gini_comparison(1)
    assert cmp.quadrature == pytest.approx(0.0, abs=1e-8)
    assert cmp.discrepancy == pytest.approx(-2 / 3, abs=1e-8)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 10])
def test_gini_sum_from_zero_matches_quadrature(n):
    q = gini_gamma(OrderN(n))
    assert gini_closed_form(n, start=0) == pytest.approx(q, abs=1e-9)
    # one-based indexing drops terms worth 4 / ((n + 1)(n + 2))
    assert q - gini_closed_form(n, start=1) == pytest.approx(4 / ((n + 1) * (n + 2)), abs=1e-9)


def test_gini_monotone_in_n():
    vals = [gini_gamma(OrderN(n)) for n in (2, 3, 5, 10)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_gini_exact_rational_at_n2():
    # C_2 is a polynomial; symbolic integration of both diagonals gives 4/15
    assert gini_gamma(OrderN(2)) == pytest.approx(float(Fraction(4, 15)), abs=1e-12)


# Kendall ---------------------------------------------------------------------------


def test_kendall_independence():
    assert kendall_tau_numeric(Independence()) == pytest.approx(0.0, abs=1e-5)


def test_kendall_order_2_monte_carlo():
    tau = kendall_tau_numeric(OrderN(2))
    est, se = kendall_tau_monte_carlo(OrderN(2), 1_000_000, seed=11)
    assert abs(est - tau) < 3 * se


def test_kendall_increasing_in_q():
    taus = [kendall_tau_numeric(Mixture(6, q)) for q in (0.0, 0.5, 1.0)]
    assert taus[0] == pytest.approx(0.0, abs=1e-12)
    assert taus[0] < taus[1] < taus[2]


def test_kendall_bessel_density_route():
    spec = BesselCopulaSpec(23.7)
    tau = kendall_tau_numeric(spec)
    est, se = kendall_tau_monte_carlo(spec, 400_000, seed=5)
    assert abs(est - tau) < 4 * se


# tails and tables -----------------------------------------------------------------------


def test_tail_estimate_values():
    assert tail_dependence_estimate(Independence(), [1e-3])[0] == pytest.approx(1e-3)
    r = tail_dependence_estimate(OrderN(5), [1e-2, 1e-3, 1e-4])
    assert np.all(np.diff(r) < 0) and r[-1] < 1e-2
    with pytest.raises(ValueError):
        tail_dependence_estimate(OrderN(2), [0.0])


def test_association_report_order_one_all_zero():
    rep = association_report(OrderN(1))
    for key, val in rep.as_dict().items():
        if key != "tail_witness":
            assert val == pytest.approx(0.0, abs=1e-12), key
    assert rep.methods["spearman"] == "closed_form"


def test_association_curve_monotone():
    rows = np.array(association_curve(30))
    np.testing.assert_allclose(rows[0, 1:], 0.0, atol=1e-12)
    n = rows[:, 0]
    np.testing.assert_allclose(rows[:, 1], (n - 1) / (n + 1), atol=1e-15)
    assert np.all(np.diff(rows[:, 1:], axis=0) > 0)
    assert np.all(rows[:, 1:] >= -1e-12) and np.all(rows[:, 1:] < 1)
    assert rows[-1, 1:].min() > 0.75
