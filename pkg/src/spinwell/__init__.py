"""Exact-diagonalisation toolkit for a two-component Bose condensate in a
double well with a laser coupling the internal states in one well."""

from .analytic import (
    EffectiveTwoLevel, ThreeLevelParams, adiabatic_elimination, effective_trap_frequency,
    sector_energy, tunneling_threshold, tunneling_thresholds,
)
from .dynamics import (
    RampProtocol, Trajectory, dt_convergence_gate, initial_state, propagate,
    validate_elimination,
)
from .fock import Basis, FockState, Mode, basis_dimension
from .model import ModelParams, SparseHermitian, assemble, two_mode_validity
from .observables import collective_spin, populations, squeezing_xi2
from .spectra import detect_steps, ground_state, omega_grid, sweep_ground

__version__ = "0.1.0"

__all__ = [
    "Basis", "EffectiveTwoLevel", "FockState", "Mode", "ModelParams", "RampProtocol",
    "SparseHermitian", "ThreeLevelParams", "Trajectory", "adiabatic_elimination",
    "assemble", "basis_dimension", "collective_spin", "detect_steps",
    "dt_convergence_gate", "effective_trap_frequency", "ground_state", "initial_state",
    "omega_grid", "populations", "propagate", "sector_energy", "squeezing_xi2",
    "sweep_ground", "tunneling_threshold", "tunneling_thresholds", "two_mode_validity",
    "validate_elimination",
]
