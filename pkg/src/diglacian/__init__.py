"""Directed-graph spectral toolkit and node classification models."""

__version__ = "0.1.0"
