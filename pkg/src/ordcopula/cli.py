"""Command-line entry point: ordcopula <subcommand> [options].

Every subcommand writes to --out (default stdout) in --format tsv (default)
or structured (JSON).  Reals are printed with 17 significant digits.  The
default seed is DEFAULT_SEED; identical command lines give identical bytes.
"""

from __future__ import annotations

import argparse
import contextlib
import sys

import numpy as np

from .bessel_copula import BesselCopulaSpec
from .copula_core import NEGATIVE, POSITIVE, lrd_check, make_spec, random_quadruples
from .dependence import association_curve, association_report
from .fitting import FitResult, correlation_table, fit_copula, fit_marginal, fit_multivariate
from .marginals import make_marginal
from .multivariate import SubsetMixtureModel, default_terms, models_table
from .sampling import sample_bivariate, sample_multivariate
from .tables import read_table, write_columns, write_pairs, write_rows

DEFAULT_SEED = 20240917
PROG = "ordcopula"


class CommandError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def _floats(text: str):
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str):
    return [int(t) for t in text.split(",") if t.strip()]


def _matrix(text: str):
    return [_floats(row) for row in text.split(";")]


def _filter(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"filter must look like COLUMN=VALUE, got {text!r}")
    col, val = text.split("=", 1)
    return col.strip(), val.strip()


def _marginal(text: str):
    """FAMILY[:p1,p2,...] with parameters in constructor order."""
    family, _, params = text.partition(":")
    vals = _floats(params) if params else []
    fam = family.replace("-", "_").lower()
    names = {
        "lagged_normal": ("xi", "beta", "alpha1", "alpha2"),
        "lagged": ("xi", "beta", "alpha1", "alpha2"),
        "normal": ("mu", "sigma"),
        "uniform": ("low", "high"),
    }.get(fam)
    if names is None or len(vals) > len(names):
        raise argparse.ArgumentTypeError(f"bad marginal {text!r}")
    return make_marginal(fam, **dict(zip(names, vals)))


def _add_common(p):
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("tsv", "structured"), default="tsv")


def _add_spec_args(p):
    p.add_argument("--family", required=True,
                   help="independence, order-n, mixture, general, range-paired, finite-mixture, permutation, bessel")
    p.add_argument("--n", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--variant", choices=("I1", "I0"), default="I1")
    p.add_argument("--matrix", type=_matrix, help="rows separated by ';', entries by ','")
    p.add_argument("--m1", type=int, default=0)
    p.add_argument("--m2", type=int, default=0)
    p.add_argument("--weights", type=_floats)
    p.add_argument("--sigma", type=_ints, help="1-based permutation")
    p.add_argument("--negative", action="store_true", help="negative orientation")


def _add_input(p):
    p.add_argument("--input", required=True)
    p.add_argument("--filter", type=_filter, action="append", default=[], metavar="COL=VALUE")


def _spec_from(args):
    orient = NEGATIVE if args.negative else POSITIVE
    if args.family == "bessel":
        if args.theta is None:
            raise CommandError("--theta is required for the bessel family")
        return BesselCopulaSpec(args.theta, args.variant, orientation=orient)
    return make_spec(args.family, n=args.n, q=args.q, matrix=args.matrix, m1=args.m1, m2=args.m2,
                     weights=args.weights, sigma=args.sigma, orientation=orient)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog=PROG, description="Order-statistics copulas: fitting, sampling, measures.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-marginal", help="ML fit of one column")
    _add_input(p)
    p.add_argument("--column", required=True)
    p.add_argument("--family", choices=("lagged-normal", "normal"), default="lagged-normal")
    p.add_argument("--tails", choices=("both", "right", "left", "none"), default="both")
    _add_common(p)

    p = sub.add_parser("fit-bivariate", help="two-stage fit of a bivariate copula model")
    _add_input(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--family", choices=("mixture", "bessel"), default="mixture")
    p.add_argument("--variant", choices=("I1", "I0"), default="I1")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--tails-x", choices=("both", "right", "left", "none"), default="both")
    p.add_argument("--tails-y", choices=("both", "right", "left", "none"), default="both")
    p.add_argument("--refine-joint", action="store_true")
    _add_common(p)

    p = sub.add_parser("fit-multivariate", help="subset-cycle model at fixed n")
    _add_input(p)
    p.add_argument("--columns", required=True, help="comma-separated column names (3 or 4)")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--tails", default="both", help="one value or one per column, comma-separated")
    p.add_argument("--pair-products", action="store_true", help="p=4: add products of two pair cycles")
    _add_common(p)

    p = sub.add_parser("sample", help="draw from a bivariate spec or a subset-cycle model")
    _add_spec_args(p)
    p.add_argument("--p", type=int, help="dimension for --family subset")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--marginal", type=_marginal, action="append", default=[],
                   help="FAMILY[:params], once per column; default uniform")
    _add_common(p)

    p = sub.add_parser("measures", help="association measures of one spec")
    _add_spec_args(p)
    _add_common(p)

    p = sub.add_parser("assoc-table", help="measures of the order-n copula for n = 1..n_max")
    p.add_argument("--n-max", type=int, default=20)
    _add_common(p)

    p = sub.add_parser("models-table", help="parameter counts of the multivariate models")
    p.add_argument("--pmax", type=int, default=5)
    p.add_argument("--pmin", type=int, default=2)
    _add_common(p)

    p = sub.add_parser("lrd-audit", help="likelihood-ratio-dependence check on random quadruples")
    _add_spec_args(p)
    p.add_argument("--count", type=int, default=10_000)
    _add_common(p)
    return ap


# ---------------------------------------------------------------------------
# commands


def _fit_pairs(fit: FitResult):
    p = fit.params
    pairs = [
        ("family", fit.family),
        ("n", fit.n),
        ("q", p.get("q")),
        ("theta", p.get("theta")),
        ("loglik", fit.loglik),
        ("aic", fit.aic),
        ("k", fit.k),
        ("converged", fit.converged),
        ("iterations", fit.iterations),
    ]
    for key in ("pred_spearman", "obs_spearman", "pred_pearson", "obs_pearson"):
        v = getattr(fit, key)
        if isinstance(v, np.ndarray):
            iu = np.triu_indices(v.shape[0], 1)
            v = ",".join("%.17g" % x for x in v[iu])
        pairs.append((key, v))
    for i, w in enumerate(fit.weights):
        pairs.append((f"w_{i}", w))
    for i, lab in enumerate(fit.term_labels):
        pairs.append((f"term_{i}", lab))
    for key in ("loglik_joint", "joint_converged"):
        if key in fit.extra:
            pairs.append((key, fit.extra[key]))
    return pairs


def _marginal_pairs(prefix, fit: FitResult):
    out = [(f"{prefix}family", fit.family)]
    out += [(f"{prefix}{k}", v) for k, v in fit.params.items()]
    out += [(f"{prefix}loglik", fit.loglik), (f"{prefix}converged", fit.converged)]
    return out


def _check_converged(*fits):
    bad = [f.family for f in fits if not f.converged]
    if bad:
        raise CommandError(f"optimizer did not converge ({', '.join(bad)}); results written with best-so-far values")


def cmd_fit_marginal(args, fh):
    data = read_table(args.input, [args.column], args.filter)
    fit = fit_marginal(data.column(args.column), args.family, args.tails, seed=args.seed)
    pairs = [("family", fit.family)] + list(fit.params.items()) + [
        ("loglik", fit.loglik), ("aic", fit.aic), ("k", fit.k), ("converged", fit.converged),
        ("iterations", fit.iterations), ("rows", data.m)]
    write_pairs(fh, pairs, args.format == "structured")
    return [fit]


def cmd_fit_bivariate(args, fh):
    data = read_table(args.input, [args.x, args.y], args.filter)
    x, y = data.column(args.x), data.column(args.y)
    fx = fit_marginal(x, tails=args.tails_x, seed=args.seed)
    fy = fit_marginal(y, tails=args.tails_y, seed=args.seed)
    _check_converged(fx, fy)
    fit = fit_copula(x, y, (fx, fy), args.family, (args.n_min, args.n_max), args.variant,
                     refine_joint=args.refine_joint, seed=args.seed)
    pairs = _fit_pairs(fit) + _marginal_pairs("x_", fx) + _marginal_pairs("y_", fy) + [("rows", data.m)]
    write_pairs(fh, pairs, args.format == "structured")
    return [fit]


def cmd_fit_multivariate(args, fh):
    cols = [c.strip() for c in args.columns.split(",")]
    if len(cols) not in (3, 4):
        raise CommandError("--columns needs 3 or 4 names")
    tails = [t.strip() for t in args.tails.split(",")]
    if len(tails) == 1:
        tails = tails * len(cols)
    if len(tails) != len(cols):
        raise CommandError("--tails needs one value or one per column")
    data = read_table(args.input, cols, args.filter)
    X = data.matrix(cols)
    margins = [fit_marginal(X[:, j], tails=tails[j], seed=args.seed) for j in range(len(cols))]
    _check_converged(*margins)
    fit = fit_multivariate(X, margins, args.n, default_terms(len(cols), args.pair_products), seed=args.seed)
    structured = args.format == "structured"
    pairs = _fit_pairs(fit)
    for j, (c, mf) in enumerate(zip(cols, margins)):
        pairs += _marginal_pairs(f"m{j + 1}_", mf)
    pairs.append(("rows", data.m))
    write_pairs(fh, pairs, structured)
    if not structured:
        fh.write("\n")
        write_columns(fh, ("i", "j", "obs_pearson", "pred_pearson", "obs_spearman", "pred_spearman"),
                      correlation_table(fit))
    return [fit]


def cmd_sample(args, fh):
    if args.count < 1:
        raise CommandError("--count must be >= 1")
    if args.family == "subset":
        if args.p is None or args.n is None or args.weights is None:
            raise CommandError("--family subset needs --p, --n and --weights")
        terms = default_terms(args.p)
        if len(args.weights) != len(terms):
            raise CommandError(f"p={args.p} needs {len(terms)} weights, got {len(args.weights)}")
        model = SubsetMixtureModel(args.p, args.n, terms, tuple(args.weights))
        margins = args.marginal or None
        batch = sample_multivariate(model, margins, args.count, args.seed)
    else:
        spec = _spec_from(args)
        margins = args.marginal or [make_marginal("uniform")] * 2
        if len(margins) != 2:
            raise CommandError("a bivariate sample needs 0 or 2 --marginal options")
        batch = sample_bivariate(spec, tuple(margins), args.count, args.seed)
    write_rows(fh, batch.names, batch.as_array().tolist(), args.format == "structured")
    return []


def cmd_measures(args, fh):
    rep = association_report(_spec_from(args))
    pairs = list(rep.as_dict().items()) + [(f"method_{k}", v) for k, v in rep.methods.items()]
    write_pairs(fh, pairs, args.format == "structured")
    return []


def cmd_assoc_table(args, fh):
    rows = association_curve(args.n_max)
    write_rows(fh, ("n", "spearman", "kendall", "blomqvist", "gini"), rows, args.format == "structured")
    return []


def cmd_models_table(args, fh):
    if args.pmin < 2 or args.pmax < args.pmin:
        raise CommandError("need 2 <= --pmin <= --pmax")
    rows = models_table(args.pmax, args.pmin)
    write_rows(fh, ("p", "single_cycle_params", "multicycle_params", "correlations"), rows,
               args.format == "structured")
    return []


def cmd_lrd_audit(args, fh):
    spec = _spec_from(args)
    rep = lrd_check(spec, random_quadruples(args.count, args.seed))
    pairs = [("spec", " ".join(repr(spec).split())), ("count", rep.count), ("minimum", rep.minimum),
             ("argmin", ",".join("%.17g" % a for a in rep.argmin)), ("holds", rep.holds)]
    write_pairs(fh, pairs, args.format == "structured")
    return []


COMMANDS = {
    "fit-marginal": cmd_fit_marginal,
    "fit-bivariate": cmd_fit_bivariate,
    "fit-multivariate": cmd_fit_multivariate,
    "sample": cmd_sample,
    "measures": cmd_measures,
    "assoc-table": cmd_assoc_table,
    "models-table": cmd_models_table,
    "lrd-audit": cmd_lrd_audit,
}


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _output(args.out) as fh:
            fits = COMMANDS[args.command](args, fh)
        _check_converged(*fits)
    except (CommandError, ValueError, KeyError, OSError, OverflowError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"{PROG}: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
