"""Optimal-partition analysis of parametric second-order conic problems."""

__version__ = "0.1.0"
