"""Simulator for RIS-aided indoor positioning and scatterer mapping."""

__version__ = "0.1.0"
