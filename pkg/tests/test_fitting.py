import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ordcopula.bessel_copula import BesselCopulaSpec
from ordcopula.copula_core import Mixture
from ordcopula.fitting import (
    Dataset,
    FitResult,
    correlation_table,
    fit_copula,
    fit_marginal,
    fit_multivariate,
    independence_loglik,
    information_criteria,
    log_likelihood,
    softmax_logits,
    softmax_weights,
)
from ordcopula.marginals import LaggedNormal, Normal, Uniform
from ordcopula.multivariate import TRIVARIATE_TERMS, SubsetMixtureModel, trivariate_model
from ordcopula.sampling import sample_bivariate, sample_multivariate


# bookkeeping -----------------------------------------------------------------------


def test_aic_reference():
    fit = FitResult("mixture", {}, -607.54, 7, True, 0)
    assert fit.aic == pytest.approx(1229.08, abs=1e-9)
    assert information_criteria(fit) == (fit.aic, 7, -607.54)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200), st.randoms(use_true_random=False))
def test_log_likelihood_order_invariant(vals, rnd):
    shuffled = list(vals)
    rnd.shuffle(shuffled)
    assert log_likelihood(vals) == log_likelihood(shuffled)
    assert log_likelihood(vals) == math.fsum(vals)


def test_softmax_basics():
    np.testing.assert_allclose(softmax_weights(np.zeros(5), pin=2), 0.2, rtol=1e-15)
    with pytest.raises(ValueError):
        softmax_weights([0.0, 1.0], pin=1)
    big = softmax_weights([800.0, 0.0, 799.0])
    assert np.all(np.isfinite(big)) and big.sum() == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=15), st.data())
def test_softmax_round_trip(raw, data):
    w = np.array(raw) / sum(raw)
    pin = data.draw(st.integers(0, len(w) - 1))
    v = softmax_logits(w, pin)
    assert v[pin] == 0.0
    np.testing.assert_allclose(softmax_weights(v, pin), w, rtol=1e-12, atol=1e-15)


def test_dataset_validation():
    with pytest.raises(ValueError, match="row 3"):
        Dataset({"a": [1.0, 2.0, np.nan]})
    with pytest.raises(ValueError):
        Dataset({"a": [1.0], "b": [1.0, 2.0]})
    d = Dataset({"a": [1, 2], "b": [3, 4]})
    assert d.m == 2 and d.matrix(["b", "a"]).tolist() == [[3, 1], [4, 2]]
    with pytest.raises(KeyError):
        d.column("c")


# marginals --------------------------------------------------------------------------


def test_marginal_recovery():
    truth = LaggedNormal(0, 1, 1, 0)
    x = truth.sample(10_000, np.random.default_rng(17))
    fit = fit_marginal(x, tails="right", seed=1)
    assert fit.converged and fit.k == 3
    m = fit.model
    assert (m.xi, m.beta, m.alpha1) == pytest.approx((0, 1, 1), abs=0.1)
    assert m.alpha2 == 0.0
    # the fitted likelihood beats the generating one
    assert fit.loglik >= log_likelihood(truth.logpdf(x)) - 1e-9
    both = fit_marginal(x, tails="both", seed=1)
    assert both.k == 4 and both.loglik >= fit.loglik - 1e-6


def test_marginal_on_normal_data():
    x = np.random.default_rng(3).normal(5, 2, 3000)
    closed = fit_marginal(x, family="normal")
    assert closed.params["mu"] == pytest.approx(x.mean()) and closed.k == 2
    none = fit_marginal(x, tails="none", seed=2)
    assert none.loglik == pytest.approx(closed.loglik, abs=1e-6)
    both = fit_marginal(x, tails="both", seed=2)
    assert both.loglik >= closed.loglik - 1e-6
    # the extra components buy less than the two parameters they cost
    assert both.aic > closed.aic - 2.0


def test_marginal_scale_equivariance():
    x = LaggedNormal(0, 1, 1.5, 0).sample(2000, np.random.default_rng(5))
    a = fit_marginal(x, tails="right", seed=0)
    b = fit_marginal(70 + 8 * x, tails="right", seed=0)
    assert b.model.xi == pytest.approx(70 + 8 * a.model.xi, rel=1e-5)
    assert b.model.beta == pytest.approx(8 * a.model.beta, rel=1e-4)
    assert b.loglik == pytest.approx(a.loglik - x.size * math.log(8), abs=1e-5)


def test_marginal_input_errors():
    with pytest.raises(ValueError):
        fit_marginal(np.arange(5.0))
    with pytest.raises(ValueError):
        fit_marginal(np.r_[np.arange(20.0), np.inf])
    with pytest.raises(ValueError):
        fit_marginal(np.ones(20))
    with pytest.raises(ValueError):
        fit_marginal(np.arange(20.0), tails="middle")


# bivariate copulas ----------------------------------------------------------------------


def _mixture_data(n, q, rows, seed):
    fx, fy = LaggedNormal(13, 2.5, 3, 0), LaggedNormal(70, 8, 6, 0)
    s = sample_bivariate(Mixture(n, q), (fx, fy), rows, seed)
    return s.columns["x"], s.columns["y"], (fx, fy)


def test_mixture_recovery_single():
    x, y, margins = _mixture_data(10, 0.78, 2000, 21)
    fit = fit_copula(x, y, margins, n_range=(2, 20), predict_pearson=False, seed=0)
    assert fit.converged
    assert fit.params["q"] == pytest.approx(0.78, abs=0.1)
    assert fit.pred_spearman == pytest.approx(fit.obs_spearman, abs=0.05)
    assert fit.k == 3 + 3 + 1  # alpha2 = 0 in both margins
    assert set(fit.extra["scan"]) == set(range(2, 21))
    assert fit.loglik == pytest.approx(max(fit.extra["scan"].values()) + independence_loglik(x, y, margins))


def test_mixture_on_independent_data():
    rng = np.random.default_rng(4)
    x, y = rng.normal(size=1500), rng.normal(size=1500)
    fit = fit_copula(x, y, (Normal(), Normal()), n_range=(2, 12), predict_pearson=False)
    assert fit.params["q"] < 0.05
    assert fit.loglik - independence_loglik(x, y, (Normal(), Normal())) < 4.0


def test_row_order_invariance():
    x, y, margins = _mixture_data(6, 0.5, 600, 8)
    perm = np.random.default_rng(0).permutation(x.size)
    a = fit_copula(x, y, margins, n_range=(2, 8), predict_pearson=False)
    b = fit_copula(x[perm], y[perm], margins, n_range=(2, 8), predict_pearson=False)
    assert a.loglik == b.loglik and a.params == b.params


def test_bessel_recovery():
    theta = 50.0
    s = sample_bivariate(BesselCopulaSpec(theta), (Uniform(), Uniform()), 3000, seed=6)
    fit = fit_copula(s.columns["x"], s.columns["y"], (Uniform(), Uniform()), family="bessel", seed=0)
    assert fit.converged
    assert fit.params["theta"] == pytest.approx(theta, rel=0.25)
    assert fit.pred_pearson == pytest.approx(fit.obs_pearson, abs=0.05)


def test_joint_refinement_not_worse():
    x, y, _ = _mixture_data(8, 0.6, 800, 2)
    mx = fit_marginal(x, tails="right", seed=0)
    my = fit_marginal(y, tails="right", seed=0)
    fit = fit_copula(x, y, (mx, my), n_range=(6, 10), refine_joint=True, predict_pearson=False)
    assert fit.k == 3 + 3 + 1
    assert fit.extra["loglik_joint"] >= fit.loglik - 1e-9
    assert isinstance(fit.extra["joint_copula"], Mixture)


def test_copula_input_errors():
    x = np.arange(30.0)
    with pytest.raises(ValueError):
        fit_copula(x, x[:-1], (Normal(), Normal()))
    with pytest.raises(ValueError):
        fit_copula(x, x, (Normal(), Normal()), family="gumbel")
    with pytest.raises(ValueError):
        fit_copula(x, x, (Normal(), Normal()), n_range=(1, 5))
    bad = FitResult("lagged_normal", {}, 0.0, 4, False, 0, Normal())
    with pytest.raises(ValueError, match="converge"):
        fit_copula(x, x, (bad, Normal()))


# multivariate -----------------------------------------------------------------------------


def test_multivariate_independent_data():
    rng = np.random.default_rng(11)
    data = rng.normal(size=(2000, 3))
    fit = fit_multivariate(data, (Normal(),) * 3, n=12, predict_pearson=False)
    assert fit.weights[0] > 0.8
    assert np.abs(fit.pred_spearman[np.triu_indices(3, 1)]).max() < 0.1
    assert fit.k == 3 * 2 + 4
    assert sum(fit.weights) == pytest.approx(1.0, abs=1e-12)


def test_multivariate_recovery_and_repin():
    # zero weight on the last term forces the pin to move
    truth = trivariate_model(12, (0.1, 0.5, 0.0, 0.4, 0.0))
    marg = (Normal(),) * 3
    data = sample_multivariate(truth, marg, 3000, seed=3).as_array()
    fit = fit_multivariate(data, marg, n=12, seed=0)
    assert fit.extra["repins"] >= 1
    assert fit.converged
    np.testing.assert_allclose(fit.weights, truth.weights, atol=0.08)
    table = correlation_table(fit)
    assert [r[:2] for r in table] == [(1, 2), (1, 3), (2, 3)]
    for _, _, op, pp, os_, ps in table:
        assert pp == pytest.approx(op, abs=0.05)
        assert ps == pytest.approx(os_, abs=0.05)


def test_multivariate_custom_terms():
    truth = SubsetMixtureModel(4, 6, ((), (3,), (12,), (3, 12)), (0.2, 0.3, 0.2, 0.3))
    data = sample_multivariate(truth, None, 2000, seed=5).as_array()
    fit = fit_multivariate(data, (Uniform(),) * 4, n=6, terms=truth.terms, predict_pearson=False)
    np.testing.assert_allclose(fit.weights, truth.weights, atol=0.1)
    assert fit.term_labels == ("indep", "T12", "T34", "T12T34")


def test_multivariate_input_errors():
    with pytest.raises(ValueError):
        fit_multivariate(np.zeros(20), (Normal(),))
    with pytest.raises(ValueError):
        fit_multivariate(np.zeros((5, 3)), (Normal(),) * 3)
    with pytest.raises(ValueError):
        fit_multivariate(np.zeros((20, 3)), (Normal(),) * 2)
