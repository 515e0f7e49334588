"""Pseudo-spectral Hall-MHD toolkit on the periodic box."""

__version__ = "0.1.0"
