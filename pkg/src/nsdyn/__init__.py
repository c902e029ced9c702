"""Pressure, outer measures and equilibrium states for nonautonomous shifts
and expanding interval maps."""

__version__ = "0.1.0"
