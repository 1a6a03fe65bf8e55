"""Schroedinger operators with delta-interactions on hypersurfaces and their squeezed-potential approximants."""

__version__ = "0.1.0"
