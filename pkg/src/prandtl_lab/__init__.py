"""Blasius boundary layer, downstream Prandtl marching, and decay-rate measurement."""

__version__ = "0.1.0"
