"""Screened nonlocal isoperimetric energies of planar curve systems."""

from .curve import ClosedCurve, CurveSystem, annulus_system, disk_system, ellipse_system
from .energy import EnergyReport, energy_boundary, energy_bulk, halfplane_constant
from .specfun import ScreeningParams

__version__ = "0.1.0"

__all__ = [
    "ClosedCurve", "CurveSystem", "EnergyReport", "ScreeningParams", "annulus_system", "disk_system",
    "ellipse_system", "energy_boundary", "energy_bulk", "halfplane_constant",
]
