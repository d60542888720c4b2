"""Entanglement witnesses for spin and continuous-variable networks."""

__version__ = "0.1.0"
