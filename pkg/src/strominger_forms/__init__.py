"""Curvature of Hermitian metrics: conformally flat domains of C^n and Lie groups."""

__version__ = "0.1.0"
