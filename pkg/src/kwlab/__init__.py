"""Numerical laboratory for the x3-invariant Kapustin-Witten equations on (0, inf) x R^2."""

__version__ = "0.1.0"
