"""Multilateration for Local Position Measurement style pseudo-ranges."""

__version__ = "0.1.0"
