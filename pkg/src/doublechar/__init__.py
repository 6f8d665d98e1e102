"""Numerical toolkit for doubly characteristic quadratic symbols, FBI transforms and L^p bounds."""

__version__ = "0.1.0"
