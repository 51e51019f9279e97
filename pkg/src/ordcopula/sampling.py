"""Random variates by pairing order statistics.

Each draw generates fresh i.i.d. marginal samples, sorts them and emits the
order statistics at a randomly chosen index pair.  Work is vectorised in
fixed-size chunks drawn from one generator, so output depends only on seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bessel_copula import BesselCopulaSpec, cumulative_weights
from .copula_core import Mixture, canonical_matrix, validate_spec
from .marginals import Uniform
from .multivariate import SubsetMixtureModel, _bits

CHUNK = 8192


@dataclass(frozen=True)
class SampleBatch:
    columns: dict
    seed: int
    description: str

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"columns differ in length: {sorted(lengths)}")

    @property
    def count(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.columns[k] for k in self.columns])


def _check_count(count: int) -> None:
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")


def _sorted_draws(model, rows: int, n: int, rng) -> np.ndarray:
    x = np.asarray(model.sample((rows, n), rng), dtype=float)
    x.sort(axis=1)
    return x


def _pick(sorted_x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return np.take_along_axis(sorted_x, idx[:, None], axis=1)[:, 0]


def _index_pairs(spec, rows: int, rng):
    """0-based index pairs (i, j) for one chunk."""
    if isinstance(spec, Mixture):
        n = spec.n
        tied = rng.random(rows) < spec.q
        i = rng.integers(0, n, rows)
        j_free = rng.integers(0, n, rows)
        j = np.where(tied, i, j_free)
        if spec.negative:
            j = np.where(tied, n - 1 - i, j)
        return n, i, j
    r = canonical_matrix(spec).r
    n = r.shape[0]
    p = r.ravel() / r.sum()
    cells = rng.choice(n * n, size=rows, p=p)
    return n, cells // n, cells % n


def sample_bivariate(spec, marginals=(Uniform(), Uniform()), count: int = 1000, seed: int = 0) -> SampleBatch:
    if isinstance(spec, BesselCopulaSpec):
        return sample_bessel(spec, marginals, count, seed)
    validate_spec(spec)
    _check_count(count)
    fx, fy = marginals
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    done = 0
    while done < count:
        rows = min(CHUNK, count - done)
        n, i, j = _index_pairs(spec, rows, rng)
        xs.append(_pick(_sorted_draws(fx, rows, n, rng), i))
        ys.append(_pick(_sorted_draws(fy, rows, n, rng), j))
        done += rows
    return SampleBatch({"x": np.concatenate(xs), "y": np.concatenate(ys)}, seed, repr(spec))


def sample_bessel(spec: BesselCopulaSpec, marginals=(Uniform(), Uniform()), count: int = 1000, seed: int = 0) -> SampleBatch:
    """Draw N from the discrete Bessel law, then a uniform equal-rank pair
    (or antiphase pair for negative orientation) among N sorted pairs."""
    _check_count(count)
    fx, fy = marginals
    rng = np.random.default_rng(seed)
    x = np.empty(count)
    y = np.empty(count)
    if spec.theta == 0:
        x[:] = fx.sample(count, rng)
        y[:] = fy.sample(count, rng)
        return SampleBatch({"x": x, "y": y}, seed, repr(spec))
    cum = cumulative_weights(spec.theta, spec.variant)
    # cum[k] is P(N <= k + 1)
    big_n = np.minimum(np.searchsorted(cum, rng.random(count), side="right"), len(cum) - 1) + 1
    for n in np.unique(big_n):
        rows = np.flatnonzero(big_n == n)
        for start in range(0, rows.size, CHUNK):
            sel = rows[start : start + CHUNK]
            k = rng.integers(0, n, sel.size)
            x[sel] = _pick(_sorted_draws(fx, sel.size, int(n), rng), k)
            y[sel] = _pick(_sorted_draws(fy, sel.size, int(n), rng), n - 1 - k if spec.negative else k)
    return SampleBatch({"x": x, "y": y}, seed, repr(spec))


def sample_copula(spec, count: int, seed: int = 0) -> np.ndarray:
    """(count, 2) array of uniform-margin draws."""
    return sample_bivariate(spec, (Uniform(), Uniform()), count, seed).as_array()


def sample_multivariate(model: SubsetMixtureModel, marginals=None, count: int = 1000, seed: int = 0) -> SampleBatch:
    """Pick a term by weight; variables in each block share one rank index.
    Variables outside every block are drawn straight from their marginal,
    which has the same law as a uniformly chosen order statistic."""
    _check_count(count)
    p, n = model.p, model.n
    marginals = tuple(marginals) if marginals is not None else (Uniform(),) * p
    if len(marginals) != p:
        raise ValueError(f"need {p} marginals, got {len(marginals)}")
    rng = np.random.default_rng(seed)
    w = np.asarray(model.weights)
    which = rng.choice(len(w), size=count, p=w / w.sum())
    out = np.empty((count, p))
    for t, term in enumerate(model.terms):
        rows = np.flatnonzero(which == t)
        if rows.size == 0:
            continue
        used = 0
        for block in term:
            k = rng.integers(0, n, rows.size)
            for j in _bits(block):
                idx = n - 1 - k if model.orientations[j] < 0 else k
                out[rows, j] = _pick(_sorted_draws(marginals[j], rows.size, n, rng), idx)
            used |= block
        for j in range(p):
            if not used >> j & 1:
                out[rows, j] = marginals[j].sample(rows.size, rng)
    cols = {f"x{j + 1}": out[:, j].copy() for j in range(p)}
    return SampleBatch(cols, seed, repr(model))
