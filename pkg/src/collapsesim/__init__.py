"""Exact versus coarse-grained simulation of a two-branch measurement interaction."""

__version__ = "0.1.0"
