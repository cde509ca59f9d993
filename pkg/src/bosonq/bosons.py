"""One-cold encoding of truncated bosonic modes onto qubits.

Mode ``m`` with at most ``Np`` excitations occupies qubits
``[m*(Np+1), (m+1)*(Np+1))``. Fock level ``n`` is the block with qubit ``n``
in |0> and every other qubit in |1>. With ``sigma_-|0> = |1>`` and
``sigma_+|1> = |0>``, the creation operator moves the single 0-bit one
position to the right.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .pauli import PauliString, PauliSum, sigma_minus, sigma_plus

SUPPORTED_EXCITATIONS = frozenset({1, 2, 4})


class RegisterError(ValueError):
    pass


@dataclass(frozen=True)
class BosonRegister:
    n_modes: int
    max_excitations: int
    strict: bool = True

    def __post_init__(self):
        if self.n_modes < 1 or self.max_excitations < 1:
            raise RegisterError("need at least one mode and one excitation")
        if self.strict and self.max_excitations not in SUPPORTED_EXCITATIONS:
            raise RegisterError(
                f"max_excitations={self.max_excitations} not in {sorted(SUPPORTED_EXCITATIONS)}; "
                "pass strict=False to lift the restriction"
            )

    @property
    def block(self) -> int:
        return self.max_excitations + 1

    @property
    def n_qubits(self) -> int:
        return self.n_modes * self.block

    def offset(self, mode: int) -> int:
        if not 0 <= mode < self.n_modes:
            raise RegisterError(f"mode {mode} outside register of {self.n_modes}")
        return mode * self.block

    def mode_qubits(self, mode: int) -> range:
        o = self.offset(mode)
        return range(o, o + self.block)


@dataclass(frozen=True)
class FockState:
    occupations: tuple[int, ...]

    def __init__(self, *occupations):
        if len(occupations) == 1 and not isinstance(occupations[0], int):
            occupations = tuple(occupations[0])
        object.__setattr__(self, "occupations", tuple(int(n) for n in occupations))

    def validate(self, reg: BosonRegister) -> None:
        if len(self.occupations) != reg.n_modes:
            raise RegisterError(f"{len(self.occupations)} occupations for {reg.n_modes} modes")
        for n in self.occupations:
            if not 0 <= n <= reg.max_excitations:
                raise RegisterError(f"occupation {n} outside [0, {reg.max_excitations}]")


def vacuum(reg: BosonRegister) -> FockState:
    return FockState((0,) * reg.n_modes)


def fock_to_bitstring(reg: BosonRegister, f: FockState) -> str:
    f.validate(reg)
    bits = []
    for n in f.occupations:
        bits.extend("0" if k == n else "1" for k in range(reg.block))
    return "".join(bits)


def bitstring_to_fock(reg: BosonRegister, bits: str) -> FockState | None:
    """Inverse of :func:`fock_to_bitstring`; ``None`` for non-codewords."""
    if len(bits) != reg.n_qubits:
        raise RegisterError(f"bitstring of length {len(bits)} for {reg.n_qubits} qubits")
    occ = []
    for m in range(reg.n_modes):
        chunk = bits[m * reg.block:(m + 1) * reg.block]
        if chunk.count("0") != 1:
            return None
        occ.append(chunk.index("0"))
    return FockState(occ)


def codewords(reg: BosonRegister) -> frozenset[str]:
    levels = range(reg.max_excitations + 1)
    return frozenset(
        fock_to_bitstring(reg, FockState(occ)) for occ in itertools.product(levels, repeat=reg.n_modes)
    )


def creation_op(reg: BosonRegister, mode: int) -> PauliSum:
    n, o = reg.n_qubits, reg.offset(mode)
    out = PauliSum.zero(n)
    for k in range(reg.max_excitations):
        out = out + math.sqrt(k + 1) * (sigma_minus(n, o + k) * sigma_plus(n, o + k + 1))
    return out


def annihilation_op(reg: BosonRegister, mode: int) -> PauliSum:
    return creation_op(reg, mode).adjoint()


def ladder_plus_hc(n_qubits: int, qubits: tuple[int, ...], pattern: str) -> PauliSum:
    """Expand ``prod sigma_{pattern[i]}^{qubits[i]} + h.c.`` into X/Y strings.

    ``pattern`` holds ``'-'`` or ``'+'`` per qubit. Each X/Y assignment gets
    weight ``2 Re(prod c) / 2^w`` with ``c = 1`` for X, ``-i`` for Y under
    sigma_- and ``+i`` for Y under sigma_+.
    """
    if len(qubits) != len(pattern) or len(set(qubits)) != len(qubits):
        raise ValueError("qubits and pattern must align and be distinct")
    w = len(qubits)
    terms = []
    for choice in itertools.product("XY", repeat=w):
        c = 1 + 0j
        for axis, sign in zip(choice, pattern):
            if axis == "Y":
                c *= -1j if sign == "-" else 1j
        coeff = 2 * c.real / 2**w
        if coeff:
            terms.append(PauliString.from_sparse(n_qubits, dict(zip(qubits, choice)), coeff))
    return PauliSum(terms, n_qubits)


def single_mode_squeeze_h(reg: BosonRegister) -> tuple[PauliSum, PauliSum]:
    """``b†² + b²`` split into its two-qubit part S2 and four-qubit part S4.

    Adjacent creation factors telescope to
    ``sqrt((k+1)(k+2)) sigma_-^k sigma_+^{k+2}``; factors on disjoint pairs
    give ``2 sqrt((j+1)(k+1))`` four-qubit ladders.
    """
    if reg.n_modes != 1:
        raise RegisterError("single-mode squeezing needs exactly one mode")
    if reg.strict and reg.max_excitations not in (2, 4):
        raise RegisterError(f"single-mode squeezing supports Np in (2, 4), got {reg.max_excitations}")
    n, npx = reg.n_qubits, reg.max_excitations
    s2 = PauliSum.zero(n)
    for k in range(npx - 1):
        s2 = s2 + math.sqrt((k + 1) * (k + 2)) * ladder_plus_hc(n, (k, k + 2), "-+")
    s4 = PauliSum.zero(n)
    for j in range(npx):
        for k in range(j + 2, npx):
            s4 = s4 + 2 * math.sqrt((j + 1) * (k + 1)) * ladder_plus_hc(n, (j, j + 1, k, k + 1), "-+-+")
    return s2, s4


def _two_single_photon_modes(reg: BosonRegister, what: str) -> None:
    if reg.n_modes != 2 or reg.max_excitations != 1:
        raise RegisterError(f"{what} needs two modes with one excitation each")


def beam_splitter_h(reg: BosonRegister) -> PauliSum:
    """``b_+† a_- + h.c.`` with mode + on qubits (0, 1) and mode - on (2, 3)."""
    _two_single_photon_modes(reg, "beam splitter")
    return ladder_plus_hc(4, (0, 1, 2, 3), "-++-")


def two_mode_squeeze_h(reg: BosonRegister) -> PauliSum:
    """``b_+† a_-† + h.c.``; same strings as the beam splitter, different signs."""
    _two_single_photon_modes(reg, "two-mode squeezing")
    return ladder_plus_hc(4, (0, 1, 2, 3), "-+-+")


def truncated_creation_matrix(max_excitations: int) -> np.ndarray:
    """``(Np+1)``-dimensional oscillator ``b†`` with ``sqrt(k+1)`` on the subdiagonal."""
    return np.diag(np.sqrt(np.arange(1, max_excitations + 1)), k=-1).astype(complex)


def codeword_indices(reg: BosonRegister) -> list[int]:
    """Computational-basis indices of the codewords in Fock (lexicographic occupation) order."""
    levels = range(reg.max_excitations + 1)
    return [
        int(fock_to_bitstring(reg, FockState(occ)), 2)
        for occ in itertools.product(levels, repeat=reg.n_modes)
    ]


def embed(reg: BosonRegister, fock_vector: np.ndarray) -> np.ndarray:
    """Map a vector over the truncated Fock space to the qubit register."""
    fock_vector = np.asarray(fock_vector, dtype=complex)
    idx = codeword_indices(reg)
    if fock_vector.shape != (len(idx),):
        raise RegisterError(f"expected Fock vector of length {len(idx)}")
    out = np.zeros(2**reg.n_qubits, dtype=complex)
    out[idx] = fock_vector
    return out


def restrict(reg: BosonRegister, matrix: np.ndarray) -> np.ndarray:
    """Codeword block of a qubit operator, rows/columns in Fock order."""
    idx = codeword_indices(reg)
    return np.asarray(matrix)[np.ix_(idx, idx)]
