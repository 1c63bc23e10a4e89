"""Angles of lattice points on circles: spacing and correlation statistics."""

__version__ = "0.1.0"
