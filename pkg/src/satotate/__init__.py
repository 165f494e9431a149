"""Tau coefficients, angle statistics, and explicit equidistribution bounds."""

__version__ = "0.1.0"
