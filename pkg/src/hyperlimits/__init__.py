"""Executable machinery for dense hypergraph limits."""

__version__ = "0.1.0"
