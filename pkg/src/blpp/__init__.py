"""Brownian last passage percolation in KPZ-scaled coordinates.

Simulation of polymer weights and weight profiles from general initial data,
with per-sample structural identity checks and Monte Carlo verification of
scaling laws against independent oracles.
"""

from . import env, errors, initcond, lpp, scaled, stats

__version__ = "0.1.0"

__all__ = ["env", "errors", "initcond", "lpp", "scaled", "stats", "__version__"]
