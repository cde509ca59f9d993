"""Digital simulation of truncated bosonic interactions on qubits."""

from .bosons import BosonRegister, FockState, beam_splitter_h, codewords, single_mode_squeeze_h, two_mode_squeeze_h
from .circuit import Circuit, TrotterScheme, compile_evolution, exp_pauli_term, prepare_fock, unitary_of
from .pauli import PauliString, PauliSum
from .sim import Counts, NoiseModel, density_matrix, execute, statevector
from .transpile import gate_counts, optimize

__all__ = [
    "BosonRegister",
    "Circuit",
    "Counts",
    "FockState",
    "NoiseModel",
    "PauliString",
    "PauliSum",
    "TrotterScheme",
    "beam_splitter_h",
    "codewords",
    "compile_evolution",
    "density_matrix",
    "execute",
    "exp_pauli_term",
    "gate_counts",
    "optimize",
    "prepare_fock",
    "single_mode_squeeze_h",
    "statevector",
    "two_mode_squeeze_h",
    "unitary_of",
]
