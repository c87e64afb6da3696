"""Numerical toolkit for Dirac operators with squeezed and delta-shell potentials."""

__version__ = "0.1.0"
