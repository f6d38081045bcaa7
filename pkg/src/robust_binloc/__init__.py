"""Robust bi-objective waste-bin location toolkit."""

__version__ = "0.1.0"
