"""Galerkin-difference / discontinuous-Galerkin acoustic wave solver.

Importing the package is cheap; the numerical modules load on demand so the
CLI can set BLAS thread counts before numpy starts.
"""

__version__ = "0.1.0"
