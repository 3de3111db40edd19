"""Constraint-matrix identification from noisy multivariate data."""

__version__ = "0.1.0"
