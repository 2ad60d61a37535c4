"""Numerical geometry of kernel-metric function spaces on finite grids."""

__version__ = "0.1.0"
