"""Capacity, dispersion and finite-blocklength coding bounds for
classical-quantum channels, computed from the geometry of the channel image."""

__version__ = "0.1.0"
