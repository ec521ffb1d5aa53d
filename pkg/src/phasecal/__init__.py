"""Explicit calibration of phased arrays with phase-dependent gain and phase errors."""

__version__ = "0.1.0"
