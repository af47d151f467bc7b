"""Bivariate two-state Markov modulated Poisson process built on the Marshall-Olkin exponential."""

__version__ = "0.1.0"
