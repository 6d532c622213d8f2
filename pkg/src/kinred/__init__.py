"""Numerics for the Hamiltonian reduction from kinetic theory to fluid dynamics."""

from .grid import PhaseGrid, make_phase_grid
from .hamiltonians import CouplingConstants
from .moments import HydroState

__version__ = "0.1.0"

__all__ = ["CouplingConstants", "HydroState", "PhaseGrid", "make_phase_grid", "__version__"]
