"""Arithmetic-universe sketches, their strict set models, and geometric compilation."""

__version__ = "0.1.0"
