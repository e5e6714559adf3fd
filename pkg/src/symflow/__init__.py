"""Symmetric Navier-Stokes flows: groups, fields, moment algebra and spectral solvers."""
__version__ = "0.1.0"
