"""Induced branching random walks on generated infinite graphs."""

__version__ = "0.1.0"
