"""Numerical laboratory for the correlation energy of dilute spin-1/2 Fermi gases."""

__version__ = "0.1.0"
