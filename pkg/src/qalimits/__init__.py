"""Numerical checks of locality limits on short-time quantum annealing."""

__version__ = "0.1.0"
