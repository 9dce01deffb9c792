"""Spectral Dirichlet-Neumann operator on nearly spherical domains."""

__version__ = "0.1.0"
