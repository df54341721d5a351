"""Driven Tavis-Cummings model of N trapped ions coupled to a vibrational mode."""

__version__ = "0.1.0"
