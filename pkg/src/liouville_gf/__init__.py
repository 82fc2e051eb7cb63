"""Liouvillian recursion Green's functions on an emulated quantum backend.

Operators live in a Pauli-string algebra; the one-dimensional Hubbard
model is mapped to qubits by Jordan-Wigner; the recursion coefficients are
measured on a statevector, exactly or with emulated shot noise.
"""

from .backend import MeasurementBackend, QuantumState, exact_ground_state, make_approximate_state
from .greens import ContinuedFraction, PoleResidueForm, SpectralDensity, poles_residues, spectral_density
from .lattice import LatticeModel, build_hubbard, h0_matrix, jw_annihilation, jw_creation
from .metrics import convergence_series, galitskii_migdal, greens_matrix, wasserstein
from .oracle import lehmann_greens
from .pauli import OperatorSum, PauliTerm, anticommutator, commutator, multiply
from .recursion import NegativeNorm, RecursionOutput, run_recursion

__version__ = "0.1.0"

__all__ = [
    "ContinuedFraction",
    "LatticeModel",
    "MeasurementBackend",
    "NegativeNorm",
    "OperatorSum",
    "PauliTerm",
    "PoleResidueForm",
    "QuantumState",
    "RecursionOutput",
    "SpectralDensity",
    "anticommutator",
    "build_hubbard",
    "commutator",
    "convergence_series",
    "exact_ground_state",
    "galitskii_migdal",
    "greens_matrix",
    "h0_matrix",
    "jw_annihilation",
    "jw_creation",
    "lehmann_greens",
    "make_approximate_state",
    "multiply",
    "poles_residues",
    "run_recursion",
    "spectral_density",
    "wasserstein",
]
