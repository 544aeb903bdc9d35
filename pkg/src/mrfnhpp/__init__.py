"""Bayesian nonparametric intensity estimation for gridded spatial point patterns."""

__version__ = "0.1.0"
