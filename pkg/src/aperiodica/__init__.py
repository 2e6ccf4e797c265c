"""Aperiodic point sets, their autocorrelation and diffraction."""

__version__ = "0.1.0"
