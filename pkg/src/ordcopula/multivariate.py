"""p-variate subset-cycle copulas.

A model is a mixture of terms.  Each term ties one or more disjoint blocks
of variables to a shared order-statistic index (one cycle per block); all
other variables are independent.  The single-cycle family has one block
per term, giving 2^p - p - 1 subset weights plus the independence weight.

Blocks are bitmasks over variables (bit i is variable i, 0-based).  A term
is a tuple of blocks; the empty tuple is the independence term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .specfun import orderstat_cdfs, orderstat_density_factors

P_MAX = 6


def _bits(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def block_label(mask: int) -> str:
    return "T" + "".join(str(i + 1) for i in _bits(mask))


def term_label(term: tuple) -> str:
    return "indep" if not term else "".join(block_label(b) for b in term)


@dataclass(frozen=True)
class SubsetMixtureModel:
    p: int
    n: int
    terms: tuple
    weights: tuple
    orientations: tuple = ()

    def __post_init__(self):
        if not 2 <= self.p <= P_MAX:
            raise ValueError(f"dimension p must be in 2..{P_MAX}, got {self.p}")
        if self.n < 1:
            raise ValueError(f"cycle order n must be >= 1, got {self.n}")
        terms = tuple(tuple(int(b) for b in t) for t in self.terms)
        w = tuple(float(x) for x in self.weights)
        if len(terms) != len(w):
            raise ValueError("terms and weights differ in length")
        full = (1 << self.p) - 1
        seen = set()
        for t in terms:
            used = 0
            for b in t:
                if b & ~full or bin(b).count("1") < 2:
                    raise ValueError(f"block {b:#b} must cover >= 2 of the {self.p} variables")
                if used & b:
                    raise ValueError(f"blocks in term {t} overlap")
                used |= b
            key = tuple(sorted(t))
            if key in seen:
                raise ValueError(f"duplicate term {term_label(t)}")
            seen.add(key)
        if any(x < 0 for x in w):
            raise ValueError("weights must be nonnegative")
        if abs(sum(w) - 1.0) > 1e-10:
            raise ValueError(f"weights sum to {sum(w):.12g}, expected 1")
        orient = tuple(self.orientations) or (1,) * self.p
        if len(orient) != self.p or any(o not in (1, -1) for o in orient):
            raise ValueError("orientations must be p entries of +1 / -1")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "orientations", orient)

    @classmethod
    def from_subsets(cls, p: int, n: int, subset_weights: dict, w0: float = 0.0, orientations=()):
        """Single-cycle model from {bitmask: weight}.

        Empty and singleton subsets describe independent variables and are
        folded into the independence weight.
        """
        acc = {(): float(w0)}
        for mask, w in subset_weights.items():
            key = () if bin(mask).count("1") < 2 else (int(mask),)
            acc[key] = acc.get(key, 0.0) + float(w)
        terms = tuple(acc)
        return cls(p, n, terms, tuple(acc[t] for t in terms), orientations)

    def weight_of(self, term) -> float:
        term = tuple(term)
        for t, w in zip(self.terms, self.weights):
            if sorted(t) == sorted(term):
                return w
        return 0.0

    def cdf(self, u):
        return multivariate_cdf(self, u)

    def pdf(self, u):
        return multivariate_pdf(self, u)


def single_cycle_terms(p: int) -> tuple:
    """Independence plus every subset of size >= 2, smallest subsets first."""
    out = [()]
    for size in range(2, p + 1):
        for combo in combinations(range(p), size):
            out.append((sum(1 << i for i in combo),))
    return tuple(out)


def _mask(*vars1based) -> int:
    return sum(1 << (v - 1) for v in vars1based)


TRIVARIATE_TERMS = (
    (),
    (_mask(2, 3),),
    (_mask(1, 3),),
    (_mask(1, 2),),
    (_mask(1, 2, 3),),
)

QUADRIVARIATE_TERMS = (
    (),
    (_mask(3, 4),),
    (_mask(2, 4),),
    (_mask(2, 3),),
    (_mask(1, 4),),
    (_mask(1, 3),),
    (_mask(1, 2),),
    (_mask(2, 3, 4),),
    (_mask(1, 3, 4),),
    (_mask(1, 2, 4),),
    (_mask(1, 2, 3),),
    (_mask(1, 2, 3, 4),),
    (_mask(1, 2), _mask(3, 4)),
    (_mask(1, 3), _mask(2, 4)),
    (_mask(1, 4), _mask(2, 3)),
)


def trivariate_model(n: int, weights, normalize: bool = False) -> SubsetMixtureModel:
    """w0 F1F2F3 + w1 F1 T23 + w2 F2 T13 + w3 F3 T12 + w4 T123.

    normalize rescales weights quoted to a few digits so they sum to 1.
    """
    w = np.asarray(weights, dtype=float)
    if normalize:
        w = w / w.sum()
    return SubsetMixtureModel(3, n, TRIVARIATE_TERMS, tuple(w))


def default_terms(p: int, pair_products: bool = False) -> tuple:
    if p == 4 and pair_products:
        return QUADRIVARIATE_TERMS
    if p == 3:
        return TRIVARIATE_TERMS
    return single_cycle_terms(p)


# ---------------------------------------------------------------------------
# evaluation


def _factor_tables(model: SubsetMixtureModel, u: np.ndarray, density: bool):
    f = orderstat_density_factors if density else orderstat_cdfs
    tables = []
    for j in range(model.p):
        t = f(u[..., j], model.n)
        tables.append(t[..., ::-1] if model.orientations[j] < 0 else t)
    return tables


def _term_values(model: SubsetMixtureModel, u, density: bool) -> np.ndarray:
    """Per-term cdf or density values, shape (..., n_terms)."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != model.p:
        raise ValueError(f"expected {model.p} coordinates, got {u.shape[-1]}")
    if np.any((u < 0) | (u > 1)):
        raise ValueError("coordinates must lie in [0, 1]")
    tables = _factor_tables(model, u, density)
    out = []
    for term in model.terms:
        used = 0
        val = np.ones(u.shape[:-1])
        for block in term:
            prod = np.ones(u.shape[:-1] + (model.n,))
            for j in _bits(block):
                prod = prod * tables[j]
            val = val * prod.mean(axis=-1)
            used |= block
        if not density:
            for j in range(model.p):
                if not used >> j & 1:
                    val = val * u[..., j]
        out.append(val)
    return np.stack(out, axis=-1)


def term_densities(model: SubsetMixtureModel, u) -> np.ndarray:
    """Density of each term at u, shape (..., n_terms); the model density is
    this matrix times the weights."""
    return _term_values(model, u, density=True)


def multivariate_cdf(model: SubsetMixtureModel, u):
    out = _term_values(model, u, density=False) @ np.asarray(model.weights)
    return out[()] if np.ndim(out) == 0 else out


def multivariate_pdf(model: SubsetMixtureModel, u):
    out = _term_values(model, u, density=True) @ np.asarray(model.weights)
    return out[()] if np.ndim(out) == 0 else out


def predicted_pairwise_spearman(model: SubsetMixtureModel) -> np.ndarray:
    """rho_s(i, j) = (n-1)/(n+1) * sum of weights of terms cycling i with j."""
    p, n = model.p, model.n
    rho = np.zeros((p, p))
    base = (n - 1) / (n + 1)
    for term, w in zip(model.terms, model.weights):
        for block in term:
            idx = _bits(block)
            for a in idx:
                for b in idx:
                    if a != b:
                        rho[a, b] += w
    sign = np.outer(model.orientations, model.orientations)
    rho = base * rho * sign
    np.fill_diagonal(rho, 1.0)
    return rho


# ---------------------------------------------------------------------------
# counting


@dataclass(frozen=True)
class CyclePartitionCount:
    p: int
    a_p: int

    @property
    def multicycle_params(self) -> int:
        return self.a_p - 1

    @property
    def single_cycle_params(self) -> int:
        return 2**self.p - self.p - 1

    @property
    def correlations(self) -> int:
        return self.p * (self.p - 1) // 2


def cycle_partition_numbers(p_max: int) -> list[int]:
    """a_0..a_p_max from a_p = sum_j C(p-1, j) a_{p-1-j}, a_0 = 1."""
    if p_max < 0:
        raise ValueError("p must be >= 0")
    a = [1]
    for p in range(1, p_max + 1):
        a.append(sum(math.comb(p - 1, j) * a[p - 1 - j] for j in range(p)))
    return a


def count_cycle_models(p: int) -> CyclePartitionCount:
    return CyclePartitionCount(p, cycle_partition_numbers(p)[p])


def models_table(p_max: int = 5, p_min: int = 2):
    """Rows (p, single-cycle params, multicycle params, p(p-1)/2)."""
    rows = []
    for p in range(p_min, p_max + 1):
        c = count_cycle_models(p)
        rows.append((p, c.single_cycle_params, c.multicycle_params, c.correlations))
    return rows


# ---------------------------------------------------------------------------
# serialisation: "n <n>", "orientations +,-,...", then "mask[+mask]\tweight"


def dumps_model(model: SubsetMixtureModel) -> str:
    lines = [f"p\t{model.p}", f"n\t{model.n}", "orientations\t" + ",".join("+" if o > 0 else "-" for o in model.orientations)]
    for term, w in zip(model.terms, model.weights):
        key = "+".join(str(b) for b in term) if term else "0"
        lines.append(f"{key}\t{w!r}")
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> SubsetMixtureModel:
    p = n = None
    orient = ()
    terms, weights = [], []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        key, val = raw.split("\t")
        if key == "p":
            p = int(val)
        elif key == "n":
            n = int(val)
        elif key == "orientations":
            orient = tuple(1 if s == "+" else -1 for s in val.split(","))
        else:
            terms.append(() if key == "0" else tuple(int(b) for b in key.split("+")))
            weights.append(float(val))
    if p is None or n is None:
        raise ValueError("model text lacks p or n")
    return SubsetMixtureModel(p, n, tuple(terms), tuple(weights), orient)
