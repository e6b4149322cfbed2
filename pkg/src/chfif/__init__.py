"""Coalescence hidden-variable fractal interpolation: inner products, scaling functions and wavelets."""

__version__ = "0.1.0"
