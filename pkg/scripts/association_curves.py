"""Spearman, Kendall, Blomqvist and Gini of the order-n copula against n.

Writes a plot-ready TSV (one row per n) and, with --bessel, the same
measures for the Bessel copula on a log-spaced theta grid.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from ordcopula.bessel_copula import BesselCopulaSpec
from ordcopula.dependence import association_curve, association_report
from ordcopula.tables import write_columns


@dataclass(frozen=True)
class Config:
    n_max: int = 20
    bessel: bool = False
    theta_grid: tuple = tuple(np.geomspace(1.0, 1000.0, 10))


def run(cfg: Config, out) -> None:
    write_columns(out, ("n", "spearman", "kendall", "blomqvist", "gini"), association_curve(cfg.n_max))
    if cfg.bessel:
        out.write("\n")
        rows = []
        for th in cfg.theta_grid:
            r = association_report(BesselCopulaSpec(float(th)))
            rows.append((float(th), r.spearman, r.kendall, r.blomqvist, r.gini))
        write_columns(out, ("theta", "spearman", "kendall", "blomqvist", "gini"), rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=Config.n_max)
    ap.add_argument("--bessel", action="store_true")
    a = ap.parse_args()
    run(Config(a.n_max, a.bessel), sys.stdout)
