"""Ensemble transfer attacks, a synthetic model zoo, and scaling-law experiments."""

__version__ = "0.1.0"
