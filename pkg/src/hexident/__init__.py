"""Identifying codes on the hexagonal grid.

Toolkit for verifying periodic vertex sets as identifying codes,
classifying their code clusters, running exact-rational discharging
ledgers against density bounds, checking structural lemmas by
three-valued window enumeration, and searching for minimum-density
periodic codes.
"""

from hexident.hexgrid import PeriodLattice, Vertex

__all__ = ["PeriodLattice", "Vertex"]
__version__ = "0.1.0"
