"""Quantum time-of-arrival laboratory."""
__version__ = "0.1.0"
