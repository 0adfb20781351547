"""Fermionic Fock space over finite mode sets."""

from .basis import (
    BasisError,
    FockBasis,
    build_basis,
    build_physical,
    build_quasiparticle,
    physical_dimension,
    quasiparticle_dimension,
)
from .hamiltonian import physical_hamiltonian, physical_monomials
from .modes import DOWN, UP, ModeSet
from .monomials import Monomials
from .ops import (
    BACKEND,
    SparseOp,
    annihilation,
    assemble,
    creation,
    identity,
    number_operator,
)
from .particle_hole import ParticleHole, particle_hole

__all__ = [
    "BACKEND", "BasisError", "DOWN", "FockBasis", "ModeSet", "Monomials", "ParticleHole",
    "SparseOp", "UP", "annihilation", "assemble", "build_basis", "build_physical",
    "build_quasiparticle", "creation", "identity", "number_operator", "particle_hole",
    "physical_dimension", "physical_hamiltonian", "physical_monomials", "quasiparticle_dimension",
]
