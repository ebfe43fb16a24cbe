"""Numerical toolkit for fractional moments of Dirichlet L-functions."""

__version__ = "0.1.0"
