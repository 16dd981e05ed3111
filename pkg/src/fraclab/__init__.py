"""Spectral fractional Laplacian laboratory on box domains."""

__version__ = "0.1.0"
