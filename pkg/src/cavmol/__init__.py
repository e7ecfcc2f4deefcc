"""Polariton photodynamics of a diatomic in an optical cavity.

Two cross-validating engines over the same model: a truncated Fock-space
spectral propagator and a coordinate-space split-operator propagator, plus
spectral analysis tools and a batch-oriented CLI.
"""
from .model import (
    CavitySpec,
    GaussianProfile,
    HqrModel,
    NoCrossingError,
    crossing_energy,
    crossing_point,
    huang_rhys,
    mirror_model,
    squeeze_factor,
)
from .fock import (
    BasisSpec,
    OperatorMatrix,
    TruncationError,
    assemble_hamiltonian,
    assemble_transformed_hamiltonian,
)

__version__ = "0.1.0"

__all__ = [
    "CavitySpec",
    "GaussianProfile",
    "HqrModel",
    "NoCrossingError",
    "BasisSpec",
    "OperatorMatrix",
    "TruncationError",
    "assemble_hamiltonian",
    "assemble_transformed_hamiltonian",
    "crossing_energy",
    "crossing_point",
    "huang_rhys",
    "mirror_model",
    "squeeze_factor",
    "__version__",
]
