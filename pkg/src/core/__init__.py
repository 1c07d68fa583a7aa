"""Pauli algebra and low-intersection Hamiltonians."""

from .pauli import PauliString, SignedPauli, ScaledPauli, ZERO, pauli_mul, dagger, commutes, hermitian_part
from .hamiltonian import BetaMode, Hamiltonian, Term, critical_beta, make_term
from .hamiltonian_io import read_hamiltonian, write_hamiltonian

__all__ = [
    "PauliString",
    "SignedPauli",
    "ScaledPauli",
    "ZERO",
    "pauli_mul",
    "dagger",
    "commutes",
    "hermitian_part",
    "BetaMode",
    "Hamiltonian",
    "Term",
    "critical_beta",
    "make_term",
    "read_hamiltonian",
    "write_hamiltonian",
]
