"""Exact star products on Kähler manifolds as truncated hbar-series."""

__version__ = "0.1.0"
