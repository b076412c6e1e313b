"""Soliton dynamics in slowly varying potentials for the 1D Gross-Pitaevskii equation.

Split-step PDE solver, symplectic modulation-parameter extraction, the
effective-Hamiltonian and Newton ODEs, and the linearized-operator toolkit.
"""

from .grid import Grid, WaveField
from .group import GroupElement, LieAlgebraElement, act, inverse, multiply
from .potential import PotentialSpec
from .solver import Diverged, SolverConfig, evolve
from .modulation import Decomposition, NoConvergence, extract
from .effective import ModState, ModulationTrajectory, effective_rhs, integrate_ode, newton_rhs
from .spectral import LinearizedOperator

__all__ = [
    "Decomposition",
    "Diverged",
    "Grid",
    "GroupElement",
    "LieAlgebraElement",
    "LinearizedOperator",
    "ModState",
    "ModulationTrajectory",
    "NoConvergence",
    "PotentialSpec",
    "SolverConfig",
    "WaveField",
    "act",
    "effective_rhs",
    "evolve",
    "extract",
    "integrate_ode",
    "inverse",
    "multiply",
    "newton_rhs",
]
