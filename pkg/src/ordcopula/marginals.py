"""Univariate marginal models.

The lagged normal is the law of X = Z + Y1 - Y2 with Z ~ N(xi, beta^2) and
Y1, Y2 exponential with means alpha1, alpha2.  Each exponential component
contributes a factor exp(shift) * Phi(z) in which shift can be huge and
Phi(z) tiny; these are combined through ``log_exp_times_phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .specfun import log_exp_times_phi, normal_cdf

# an exponential component with alpha / beta below this is dropped
ALPHA_DROP = 1e-8
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LaggedNormal:
    xi: float = 0.0
    beta: float = 1.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    family: str = field(default="lagged_normal", init=False, repr=False)

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ValueError(f"alpha1, alpha2 must be >= 0, got {self.alpha1}, {self.alpha2}")

    @property
    def params(self) -> dict:
        return {"xi": self.xi, "beta": self.beta, "alpha1": self.alpha1, "alpha2": self.alpha2}

    def _active(self):
        a1 = self.alpha1 if self.alpha1 > ALPHA_DROP * self.beta else 0.0
        a2 = self.alpha2 if self.alpha2 > ALPHA_DROP * self.beta else 0.0
        return a1, a2

    def _log_terms(self, x):
        """log of the two bracketed terms exp(.) Phi(.), or None when dropped."""
        t = np.asarray(x, dtype=float) - self.xi
        b = self.beta
        a1, a2 = self._active()
        gauss = -0.5 * (t / b) ** 2
        out = []
        for a, sgn in ((a1, 1.0), (a2, -1.0)):
            if a == 0.0:
                out.append(None)
                continue
            s = b / a
            z = sgn * t / b - s
            shift = 0.5 * s * s - sgn * t / a
            out.append(log_exp_times_phi(shift, z, gauss))
        return t, a1, a2, out

    def logpdf(self, x):
        t, a1, a2, (l1, l2) = self._log_terms(x)
        if a1 == 0.0 and a2 == 0.0:
            return -0.5 * (t / self.beta) ** 2 - _LOG_SQRT_2PI - math.log(self.beta)
        parts = [p for p in (l1, l2) if p is not None]
        acc = parts[0] if len(parts) == 1 else np.logaddexp(parts[0], parts[1])
        return acc - math.log(a1 + a2)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        t, a1, a2, (l1, l2) = self._log_terms(x)
        base = normal_cdf(t / self.beta)
        if a1 == 0.0 and a2 == 0.0:
            return base
        corr = 0.0
        if l1 is not None:
            corr = corr - a1 * np.exp(l1)
        if l2 is not None:
            corr = corr + a2 * np.exp(l2)
        return np.clip(base + corr / (a1 + a2), 0.0, 1.0)

    def moments(self):
        """(mean, variance, skewness, excess kurtosis)."""
        a1, a2 = self.alpha1, self.alpha2
        var = self.beta**2 + a1**2 + a2**2
        sd = math.sqrt(var)
        return (
            self.xi + a1 - a2,
            var,
            2.0 * (a1**3 - a2**3) / sd**3,
            6.0 * (a1**4 + a2**4) / var**2,
        )

    def sample(self, size, rng: np.random.Generator):
        x = rng.normal(self.xi, self.beta, size)
        if self.alpha1 > 0:
            x = x + rng.exponential(self.alpha1, size)
        if self.alpha2 > 0:
            x = x - rng.exponential(self.alpha2, size)
        return x

    def ppf(self, p, tol: float = 1e-10):
        return _bisect_ppf(self, p, tol)


@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0
    family: str = field(default="normal", init=False, repr=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    @property
    def params(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma}

    def logpdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return -0.5 * z * z - _LOG_SQRT_2PI - math.log(self.sigma)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        return normal_cdf((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def moments(self):
        return (self.mu, self.sigma**2, 0.0, 0.0)

    def sample(self, size, rng: np.random.Generator):
        return rng.normal(self.mu, self.sigma, size)

    def ppf(self, p, tol: float = 1e-10):
        return _bisect_ppf(self, p, tol)


@dataclass(frozen=True)
class Uniform:
    low: float = 0.0
    high: float = 1.0
    family: str = field(default="uniform", init=False, repr=False)

    def __post_init__(self):
        if not self.high > self.low:
            raise ValueError("need high > low")

    @property
    def params(self) -> dict:
        return {"low": self.low, "high": self.high}

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.low) & (x <= self.high), 1.0 / (self.high - self.low), 0.0)

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.low) / (self.high - self.low), 0.0, 1.0)

    def moments(self):
        w = self.high - self.low
        return (0.5 * (self.low + self.high), w * w / 12.0, 0.0, -1.2)

    def sample(self, size, rng: np.random.Generator):
        return rng.uniform(self.low, self.high, size)

    def ppf(self, p, tol: float = 1e-10):
        return self.low + np.asarray(p, dtype=float) * (self.high - self.low)


MarginalModel = LaggedNormal | Normal | Uniform


def _bisect_ppf(model, p, tol):
    p = np.asarray(p, dtype=float)
    mean, var, _, _ = model.moments()
    sd = math.sqrt(var)

    def one(prob):
        if not 0.0 < prob < 1.0:
            return -math.inf if prob <= 0 else math.inf
        lo, hi = mean - 10 * sd, mean + 10 * sd
        while model.cdf(lo) > prob:
            lo -= 10 * sd
        while model.cdf(hi) < prob:
            hi += 10 * sd
        return brentq(lambda x: float(model.cdf(x)) - prob, lo, hi, xtol=tol)

    out = np.vectorize(one, otypes=[float])(p)
    return out[()] if out.ndim == 0 else out


def marginal_pdf(model, x):
    return model.pdf(x)


def marginal_cdf(model, x):
    return model.cdf(x)


def marginal_moments(model):
    return model.moments()


def marginal_sample(model, count: int, seed: int):
    if count < 1:
        raise ValueError("count must be >= 1")
    return model.sample(count, np.random.default_rng(seed))


def make_marginal(family: str, **params):
    family = family.replace("-", "_").lower()
    if family in ("lagged_normal", "lagged"):
        return LaggedNormal(**params)
    if family == "normal":
        return Normal(**params)
    if family == "uniform":
        return Uniform(**params)
    raise ValueError(f"unknown marginal family {family!r}")
