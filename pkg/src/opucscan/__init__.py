"""Numerics for orthogonal polynomials on the unit circle.

Szegő recurrences and transfer matrices, Prüfer variables for rotated
coefficient families, Fourier tails and s-energies, and empirical scans of
the set of angles where the transfer matrices grow without bound.
"""
from .verblunsky import CoefficientSequence, materialize

__version__ = "0.1.0"

__all__ = ["CoefficientSequence", "materialize", "__version__"]
