"""Magnetic Weyl calculus on truncated phase-space lattices."""

from .grid import PhaseGrid, PhasePoint, SymbolField, make_grid, sample, lp_norm

__all__ = ["PhaseGrid", "PhasePoint", "SymbolField", "make_grid", "sample", "lp_norm"]
__version__ = "0.1.0"
