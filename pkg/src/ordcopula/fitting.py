"""Two-stage maximum likelihood: marginals first, then dependence.

All optimisation is Nelder-Mead on unconstrained transforms:
  beta = exp(b), alpha = a^2, q = logistic(l), theta = exp(t),
  subset weights = softmax with one pinned logit.
Log-likelihoods are summed with math.fsum, which is correctly rounded and
therefore independent of row order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit
from scipy.stats import pearsonr, spearmanr

from .bessel_copula import BesselCopulaSpec, bessel_log_pdf, theta_from_spearman
from .copula_core import Mixture
from .dependence import spearman_rho
from .marginals import LaggedNormal, Normal
from .multivariate import (
    SubsetMixtureModel,
    default_terms,
    predicted_pairwise_spearman,
    term_densities,
    term_label,
)
from .sampling import sample_bivariate, sample_multivariate
from .specfun import orderstat_density_factors

MIN_ROWS = 10
RESTARTS = 3
FATOL = 1e-8
XATOL = 1e-6
PEARSON_DRAWS = 100_000
# a pinned softmax weight below this triggers a repin
COLLAPSE = 1e-3
MAX_REPINS = 5
_U_EPS = 1e-15


@dataclass(frozen=True)
class Dataset:
    columns: dict
    filter_desc: str = ""

    def __post_init__(self):
        cols = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        lengths = {v.size for v in cols.values()}
        if len(lengths) != 1:
            raise ValueError(f"columns differ in length: {sorted(lengths)}")
        for k, v in cols.items():
            bad = np.flatnonzero(~np.isfinite(v))
            if bad.size:
                raise ValueError(f"column {k!r} has a non-finite value at row {bad[0] + 1}")
        object.__setattr__(self, "columns", cols)

    @property
    def m(self) -> int:
        return next(iter(self.columns.values())).size

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"no column {name!r}; have {', '.join(self.columns)}")
        return self.columns[name]

    def matrix(self, names) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names])


@dataclass
class FitResult:
    family: str
    params: dict
    loglik: float
    k: int
    converged: bool
    iterations: int
    model: object = None
    n: int | None = None
    weights: tuple = ()
    term_labels: tuple = ()
    pred_spearman: object = None
    obs_spearman: object = None
    pred_pearson: object = None
    obs_pearson: object = None
    extra: dict = field(default_factory=dict)

    @property
    def aic(self) -> float:
        return 2.0 * self.k - 2.0 * self.loglik


def information_criteria(fit: FitResult):
    """(AIC, k, loglik)."""
    return fit.aic, fit.k, fit.loglik


def log_likelihood(values) -> float:
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


# ---------------------------------------------------------------------------
# optimiser wrapper


@dataclass(frozen=True)
class _Optimum:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool


def _nelder_mead(objective, x0, maxiter: int = 20000) -> _Optimum:
    res = minimize(
        objective,
        np.asarray(x0, dtype=float),
        method="Nelder-Mead",
        options={"xatol": XATOL, "fatol": FATOL, "maxiter": maxiter, "maxfev": 2 * maxiter, "adaptive": len(x0) > 4},
    )
    return _Optimum(np.atleast_1d(res.x), float(res.fun), int(res.nit), bool(res.success))


def _multistart(objective, x0, rng, scale: float = 0.5, restarts: int = RESTARTS) -> _Optimum:
    """Best of x0 plus seeded perturbations, then one restart from the best
    point; converged only if that restart moves the objective by < 1e-6."""
    x0 = np.asarray(x0, dtype=float)
    starts = [x0] + [x0 + scale * rng.standard_normal(x0.size) for _ in range(restarts)]
    runs = [_nelder_mead(objective, s) for s in starts]
    finite = [r for r in runs if math.isfinite(r.value)]
    if not finite:
        return runs[0]
    best = min(finite, key=lambda r: r.value)
    again = _nelder_mead(objective, best.x)
    its = sum(r.iterations for r in runs) + again.iterations
    stable = abs(again.value - best.value) < 1e-6
    final = again if again.value <= best.value else best
    return _Optimum(final.x, final.value, its, bool(best.converged and again.converged and stable))


# ---------------------------------------------------------------------------
# marginals

TAILS = ("both", "right", "left", "none")


def _lagged_unpack(z, tails):
    xi, b = z[0], z[1]
    a1 = z[2] ** 2 if tails in ("both", "right") else 0.0
    a2 = (z[3] if tails == "both" else z[2]) ** 2 if tails in ("both", "left") else 0.0
    return LaggedNormal(float(xi), float(math.exp(b)), float(a1), float(a2))


def _lagged_start(x, tails):
    mean, sd = float(np.mean(x)), float(np.std(x))
    g = float(np.mean((x - mean) ** 3)) / sd**3
    # one-sided moment match: skew = 2 a^3 / sd^3
    a = sd * min(abs(g) / 2.0, 0.7) ** (1.0 / 3.0)
    a1 = a if (tails == "right" or (tails == "both" and g > 0)) else 0.0
    a2 = a if (tails == "left" or (tails == "both" and g <= 0)) else 0.0
    if tails == "both":
        a1, a2 = max(a1, 0.1 * sd), max(a2, 0.1 * sd)
    beta = math.sqrt(max(sd * sd - a1 * a1 - a2 * a2, 0.05 * sd * sd))
    z = [mean - a1 + a2, math.log(beta)]
    if tails in ("both", "right"):
        z.append(math.sqrt(a1))
    if tails in ("both", "left"):
        z.append(math.sqrt(a2))
    return np.array(z)


def _marginal_k(model) -> int:
    if isinstance(model, LaggedNormal):
        return 2 + (model.alpha1 > 0) + (model.alpha2 > 0)
    return len(model.params)


def fit_marginal(x, family: str = "lagged_normal", tails: str = "both", seed: int = 0) -> FitResult:
    """ML fit of one column.  tails selects the exponential components of
    the lagged normal; 'right' fixes alpha2 = 0."""
    x = np.asarray(x, dtype=float)
    if x.size < MIN_ROWS:
        raise ValueError(f"need at least {MIN_ROWS} rows, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("column contains non-finite values")
    family = family.replace("-", "_")
    if family == "normal":
        model = Normal(float(x.mean()), float(x.std()))
        return FitResult("normal", model.params, log_likelihood(model.logpdf(x)), 2, True, 0, model)
    if family != "lagged_normal":
        raise ValueError(f"unknown marginal family {family!r}")
    if tails not in TAILS:
        raise ValueError(f"tails must be one of {TAILS}")
    scale = float(np.std(x))
    if scale == 0:
        raise ValueError("column is constant")
    # optimise on standardised data; ell shifts by -m log(scale)
    loc = float(np.mean(x))
    xs = (x - loc) / scale

    def nll(z):
        with np.errstate(all="ignore"):
            val = -log_likelihood(_lagged_unpack(z, tails).logpdf(xs))
        return val if math.isfinite(val) else 1e300

    opt = _multistart(nll, _lagged_start(xs, tails), np.random.default_rng(seed))
    std = _lagged_unpack(opt.x, tails)
    model = LaggedNormal(loc + scale * std.xi, scale * std.beta, scale * std.alpha1, scale * std.alpha2)
    ll = log_likelihood(model.logpdf(x))
    k = {"both": 4, "right": 3, "left": 3, "none": 2}[tails]
    return FitResult("lagged_normal", model.params, ll, k, opt.converged, opt.iterations, model,
                     extra={"tails": tails})


def _as_model(m):
    return m.model if isinstance(m, FitResult) else m


def _as_k(m) -> int:
    return m.k if isinstance(m, FitResult) else _marginal_k(m)


def _to_uniform(model, x):
    return np.clip(model.cdf(x), _U_EPS, 1.0 - _U_EPS)


# ---------------------------------------------------------------------------
# bivariate copulas


def _order_n_density(u, v, n):
    return np.mean(orderstat_density_factors(u, n) * orderstat_density_factors(v, n), axis=-1)


def _fit_mixture_q(c, rho_obs, n, rng):
    q0 = min(max(rho_obs * (n + 1) / (n - 1), 0.02), 0.98)

    def nll(z):
        q = expit(z[0])
        return -log_likelihood(np.log1p(q * (c - 1.0)))

    return _multistart(nll, [logit(q0)], rng, scale=1.0)


def _observed(x, y):
    return float(spearmanr(x, y)[0]), float(pearsonr(x, y)[0])


def _predicted_pearson(spec, mx, my, seed):
    s = sample_bivariate(spec, (mx, my), PEARSON_DRAWS, seed).as_array()
    return float(np.corrcoef(s[:, 0], s[:, 1])[0, 1])


def fit_copula(x, y, margins, family: str = "mixture", n_range=(2, 20), variant: str = "I1",
               refine_joint: bool = False, predict_pearson: bool = True, seed: int = 0) -> FitResult:
    """Dependence stage with the marginal fits held fixed.

    mixture: q for every n in n_range (inclusive), best n by likelihood.
    bessel: log theta.  Reported loglik includes the marginal terms.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("columns differ in length")
    if x.size < MIN_ROWS:
        raise ValueError(f"need at least {MIN_ROWS} rows, got {x.size}")
    for m in margins:
        if isinstance(m, FitResult) and not m.converged:
            raise ValueError(f"marginal fit ({m.family}) did not converge")
    mx, my = (_as_model(m) for m in margins)
    k_marg = sum(_as_k(m) for m in margins)
    ll_marg = log_likelihood(mx.logpdf(x)) + log_likelihood(my.logpdf(y))
    u, v = _to_uniform(mx, x), _to_uniform(my, y)
    rho_obs, pear_obs = _observed(x, y)
    rng = np.random.default_rng(seed)

    if family == "mixture":
        lo, hi = n_range
        if lo < 2 or hi < lo:
            raise ValueError("n_range must satisfy 2 <= lo <= hi")
        scan = {}
        for n in range(lo, hi + 1):
            scan[n] = _fit_mixture_q(_order_n_density(u, v, n), rho_obs, n, rng)
        n_best = max(scan, key=lambda n: (-scan[n].value, -n))
        opt = scan[n_best]
        q = float(expit(opt.x[0]))
        spec = Mixture(n_best, q)
        params = {"n": n_best, "q": q}
        extra = {"scan": {n: -o.value for n, o in scan.items()}}
        iterations = sum(o.iterations for o in scan.values())
    elif family == "bessel":
        r0 = min(max(abs(rho_obs), 1e-3), 0.995)
        t0 = math.log(theta_from_spearman(r0, variant))

        def nll(z):
            spec_ = BesselCopulaSpec(float(math.exp(z[0])), variant)
            return -log_likelihood(bessel_log_pdf(spec_, u, v))

        opt = _multistart(nll, [t0], rng, scale=1.0)
        spec = BesselCopulaSpec(float(math.exp(opt.x[0])), variant)
        params = {"theta": spec.theta}
        n_best, extra, iterations = None, {}, opt.iterations
    else:
        raise ValueError(f"unknown copula family {family!r}")

    ll = ll_marg - opt.value
    result = FitResult(family, params, ll, k_marg + 1, opt.converged, iterations, spec, n=n_best,
                       pred_spearman=float(spearman_rho(spec)), obs_spearman=rho_obs,
                       obs_pearson=pear_obs, extra=extra)
    result.extra["loglik_copula"] = -opt.value
    if predict_pearson:
        result.pred_pearson = _predicted_pearson(spec, mx, my, seed)
    if refine_joint:
        result.extra.update(_refine_joint(x, y, margins, spec, rng))
    return result


def _refine_joint(x, y, margins, spec, rng):
    """Float marginal and copula parameters together from the two-stage
    optimum; returns the joint loglik and parameters without replacing
    the two-stage estimates."""
    fits = [m if isinstance(m, FitResult) else None for m in margins]
    tails = [f.extra.get("tails", "both") if f is not None and f.family == "lagged_normal" else None for f in fits]
    if any(t is None for t in tails):
        return {"joint_note": "joint refinement needs lagged-normal marginal fits"}

    def pack_margin(model, t):
        z = [model.xi, math.log(model.beta)]
        if t in ("both", "right"):
            z.append(math.sqrt(model.alpha1))
        if t in ("both", "left"):
            z.append(math.sqrt(model.alpha2))
        return z

    zx = pack_margin(fits[0].model, tails[0])
    zy = pack_margin(fits[1].model, tails[1])
    if isinstance(spec, Mixture):
        zc = [float(logit(min(max(spec.q, 1e-9), 1 - 1e-9)))]
        make = lambda z: Mixture(spec.n, float(expit(z[0])))
        logc = lambda s, u, v: np.log1p(s.q * (_order_n_density(u, v, s.n) - 1.0))
    else:
        zc = [math.log(spec.theta)]
        make = lambda z: BesselCopulaSpec(float(math.exp(z[0])), spec.variant)
        logc = lambda s, u, v: bessel_log_pdf(s, u, v)
    nx, ny = len(zx), len(zy)

    def nll(z):
        with np.errstate(all="ignore"):
            mx = _lagged_unpack(z[:nx], tails[0])
            my = _lagged_unpack(z[nx:nx + ny], tails[1])
            s = make(z[nx + ny:])
            val = (log_likelihood(mx.logpdf(x)) + log_likelihood(my.logpdf(y))
                   + log_likelihood(logc(s, _to_uniform(mx, x), _to_uniform(my, y))))
        return -val if math.isfinite(val) else 1e300

    z0 = np.array(zx + zy + zc)
    opt = _nelder_mead(nll, z0, maxiter=40000)
    if opt.value > nll(z0):
        opt = _Optimum(z0, nll(z0), opt.iterations, opt.converged)
    return {"loglik_joint": -opt.value, "joint_converged": opt.converged,
            "joint_copula": make(opt.x[nx + ny:])}


# ---------------------------------------------------------------------------
# softmax weights


def softmax_weights(v, pin: int | None = None) -> np.ndarray:
    """exp(v_i) / sum_j exp(v_j) with max subtraction.  If pin is given,
    v[pin] must be 0: it anchors the otherwise free additive shift."""
    v = np.asarray(v, dtype=float)
    if pin is not None and v[pin] != 0.0:
        raise ValueError(f"pinned entry v[{pin}] must be 0, got {v[pin]}")
    e = np.exp(v - v.max())
    return e / e.sum()


def softmax_logits(w, pin: int) -> np.ndarray:
    """Inverse of softmax_weights for strictly positive w."""
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    return np.log(w) - math.log(w[pin])


def _insert_pin(free, pin):
    return np.insert(np.asarray(free, dtype=float), pin, 0.0)


# ---------------------------------------------------------------------------
# multivariate


def fit_multivariate(data, margins, n: int = 12, terms=None, predict_pearson: bool = True,
                     seed: int = 0) -> FitResult:
    """Subset weights at fixed n by softmax-parameterised ML.

    The pin starts on the last term; if the pinned weight collapses below
    COLLAPSE the pin moves to the largest weight and the fit restarts from
    the current weights (at most MAX_REPINS times).
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be a rows x variables array")
    m, p = data.shape
    if m < MIN_ROWS:
        raise ValueError(f"need at least {MIN_ROWS} rows, got {m}")
    if len(margins) != p:
        raise ValueError(f"need {p} marginal fits, got {len(margins)}")
    for mg in margins:
        if isinstance(mg, FitResult) and not mg.converged:
            raise ValueError(f"marginal fit ({mg.family}) did not converge")
    models = [_as_model(mg) for mg in margins]
    terms = tuple(terms) if terms is not None else default_terms(p)
    K = len(terms)
    template = SubsetMixtureModel(p, n, terms, (1.0 / K,) * K)
    U = np.column_stack([_to_uniform(md, data[:, j]) for j, md in enumerate(models)])
    D = term_densities(template, U)

    def nll_w(w):
        return -log_likelihood(np.log(D @ w))

    rng = np.random.default_rng(seed)
    pin = K - 1
    w = np.full(K, 1.0 / K)
    iterations, repins, converged = 0, 0, False
    while True:
        def nll(z, pin=pin):
            return nll_w(softmax_weights(_insert_pin(z, pin)))

        opt = _multistart(nll, np.delete(softmax_logits(w, pin), pin), rng, scale=1.0)
        iterations += opt.iterations
        w = softmax_weights(_insert_pin(opt.x, pin))
        converged = opt.converged
        if w[pin] >= COLLAPSE or repins >= MAX_REPINS:
            break
        pin = int(np.argmax(w))
        w = np.maximum(w, 1e-12)
        w = w / w.sum()
        repins += 1

    model = SubsetMixtureModel(p, n, terms, tuple(w))
    ll_marg = sum(log_likelihood(md.logpdf(data[:, j])) for j, md in enumerate(models))
    obs_s = spearmanr(data)[0] if p > 2 else np.array([[1, spearmanr(data[:, 0], data[:, 1])[0]], [0, 1]])
    obs_s = np.asarray(obs_s, dtype=float)
    result = FitResult(
        "multivariate", {"n": n}, ll_marg - nll_w(w), sum(_as_k(mg) for mg in margins) + K - 1,
        converged, iterations, model, n=n, weights=tuple(float(x) for x in w),
        term_labels=tuple(term_label(t) for t in terms),
        pred_spearman=predicted_pairwise_spearman(model), obs_spearman=obs_s,
        obs_pearson=np.corrcoef(data, rowvar=False),
        extra={"repins": repins, "pin": pin, "loglik_copula": -nll_w(w)},
    )
    if predict_pearson:
        sim = sample_multivariate(model, models, PEARSON_DRAWS, seed).as_array()
        result.pred_pearson = np.corrcoef(sim, rowvar=False)
    return result


def correlation_table(fit: FitResult):
    """Rows (i, j, obs_pearson, pred_pearson, obs_spearman, pred_spearman)
    for i < j, 1-based, in the layout of a pairwise comparison table."""
    p = fit.model.p
    rows = []
    for i in range(p):
        for j in range(i + 1, p):
            pp = float(fit.pred_pearson[i, j]) if fit.pred_pearson is not None else float("nan")
            rows.append((i + 1, j + 1, float(fit.obs_pearson[i, j]), pp,
                         float(fit.obs_spearman[i, j]), float(fit.pred_spearman[i, j])))
    return rows


def independence_loglik(x, y, margins) -> float:
    mx, my = (_as_model(m) for m in margins)
    return log_likelihood(mx.logpdf(x)) + log_likelihood(my.logpdf(y))

