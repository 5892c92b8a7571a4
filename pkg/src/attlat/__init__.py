"""Lattices of attractors and repellers of discretized dynamical systems.

Combinatorial multivalued maps (digraphs) over dyadic box grids, their
omega/alpha limit structure, the six invariance lattices and their duality,
outer approximations of continuous maps, and the realization of prescribed
attractor/repeller lattices as certified lifts into the combinatorial data.
"""

from .dynamics import CellSet, MultivaluedMap
from .grid import Box, BoxUnion, Grid
from .lattice import FiniteDistributiveLattice, Poset
from .lift import LiftResult, TargetLattice

__all__ = [
    "Box",
    "BoxUnion",
    "CellSet",
    "FiniteDistributiveLattice",
    "Grid",
    "LiftResult",
    "MultivaluedMap",
    "Poset",
    "TargetLattice",
]

__version__ = "0.1.0"
