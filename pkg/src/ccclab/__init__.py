"""Exact-diagonalization laboratory for current-current correlations,
conductivity and localization in random lattice models."""

from .model import (DisorderSpec, LatticeSpec, Operator, build_hamiltonian,
                    position_operator, velocity_operator)
from .spectral import (EigenSystem, EnergyInterval, TraceWindow, diagonalize,
                       dos_ids, fermi_projector, fermi_weight,
                       heisenberg_evolve, spectral_projector,
                       trace_per_volume)

__version__ = "0.1.0"

__all__ = [
    "DisorderSpec", "LatticeSpec", "Operator", "build_hamiltonian",
    "position_operator", "velocity_operator", "EigenSystem",
    "EnergyInterval", "TraceWindow", "diagonalize", "dos_ids",
    "fermi_projector", "fermi_weight", "heisenberg_evolve",
    "spectral_projector", "trace_per_volume", "__version__",
]
