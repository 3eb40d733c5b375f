"""Numerical models of ultracold atoms in optical lattices: Bose-Hubbard physics, neutral-atom gates, Ising GHZ preparation and the Hofstadter spectrum."""

__version__ = "0.1.0"

from ._validation import CapacityError, ConvergenceError
from .bose_hubbard import BHModel, BoseHubbardED, crossover_scan, ground_observables
from .fock import FockBasis, apply_hop, build_basis, number_operator
from .gates import (
    TruthTable,
    collisional_gate,
    collisional_phase,
    rydberg_truth_table,
    solve_hold_time,
)
from .hofstadter import HofstadterSpectrum, butterfly, harper_matrix
from .lattice import GaussianWell, LatticeParams, optical_potential, trap_frequency
from .meanfield import GutzwillerMeanField, gutzwiller_ground, lobe_boundary, phase_diagram
from .numerics import eigensolve, evolve, evolve_path, quadrature
from .spin_chain import IsingParams, adiabatic_sweep, interferometer_phase, trotter_evolve

__all__ = [
    "BHModel",
    "BoseHubbardED",
    "CapacityError",
    "ConvergenceError",
    "FockBasis",
    "GaussianWell",
    "GutzwillerMeanField",
    "HofstadterSpectrum",
    "IsingParams",
    "LatticeParams",
    "TruthTable",
    "adiabatic_sweep",
    "apply_hop",
    "build_basis",
    "butterfly",
    "collisional_gate",
    "collisional_phase",
    "crossover_scan",
    "eigensolve",
    "evolve",
    "evolve_path",
    "ground_observables",
    "gutzwiller_ground",
    "harper_matrix",
    "interferometer_phase",
    "lobe_boundary",
    "number_operator",
    "optical_potential",
    "phase_diagram",
    "quadrature",
    "rydberg_truth_table",
    "solve_hold_time",
    "trap_frequency",
    "trotter_evolve",
]
