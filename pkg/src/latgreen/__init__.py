"""Lattice Green functions from torus symbols via a smooth cutoff decomposition."""

__version__ = "0.1.0"
