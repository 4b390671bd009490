"""Deformed Z_d Kitaev states and the d-state clock model."""

__version__ = "0.1.0"
