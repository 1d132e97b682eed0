"""Numerical toolkit for scalar curvature of circle-invariant metrics."""

__version__ = "0.1.0"
