"""Numerical laboratory for group-invariant L_p and dual Minkowski problems."""

__version__ = "0.1.0"
