"""Conditionally parametrized layers with prefix-tree weight tables."""
__version__ = "0.1.0"
