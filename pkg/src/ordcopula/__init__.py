"""Copulas built from order statistics: finite-order, mixture and Bessel families."""
