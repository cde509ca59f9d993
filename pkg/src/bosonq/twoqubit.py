"""Canonical (KAK) decomposition of two-qubit unitaries and a 2-CNOT template.

Any U in U(4) factors as ``e^{i*phase} (K1l ⊗ K1r) exp(i(a XX + b YY + c ZZ)) (K2l ⊗ K2r)``.
When one of (a, b, c) is a multiple of pi/2 the nonlocal part is
``exp(i(a P P + b Q Q))`` which two CNOTs realize exactly:
``exp(i(a XX + b ZZ)) = CNOT (exp(iaX) ⊗ exp(ibZ)) CNOT``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SQ2 = 1 / math.sqrt(2)
MAGIC = _SQ2 * np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
)

_P = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}
_PP = {k: np.kron(_P[k], _P[k]) for k in "XYZ"}
# XX, YY, ZZ are diagonal in the magic basis with +-1 entries
_DIAG = np.array(
    [np.ones(4)] + [np.real(np.diag(MAGIC.conj().T @ _PP[k] @ MAGIC)) for k in "XYZ"]
).T
_DIAG_INV = np.linalg.inv(_DIAG)

CNOT01 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class KAK:
    phase: float
    coords: tuple[float, float, float]
    k1: tuple[np.ndarray, np.ndarray]
    k2: tuple[np.ndarray, np.ndarray]

    def nonlocal_part(self) -> np.ndarray:
        a, b, c = self.coords
        return np.diag(np.exp(1j * (_DIAG[:, 1:] @ np.array([a, b, c])))).astype(complex)

    def unitary(self) -> np.ndarray:
        core = MAGIC @ self.nonlocal_part() @ MAGIC.conj().T
        return np.exp(1j * self.phase) * np.kron(*self.k1) @ core @ np.kron(*self.k2)


def factor_local(m: np.ndarray, atol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Split a 4x4 ``A ⊗ B`` into its 2x2 factors (global phase absorbed into A)."""
    blocks = m.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3)
    norms = np.linalg.norm(blocks, axis=(2, 3))
    i, j = np.unravel_index(np.argmax(norms), norms.shape)
    b = blocks[i, j]
    b = b / np.sqrt(np.linalg.det(b))
    a = np.einsum("ijkl,kl->ij", blocks, b.conj()) / 2
    if np.abs(np.kron(a, b) - m).max() > atol:
        raise DecompositionError("matrix is not a tensor product")
    return a, b


def _real_orthogonal_eigvecs(sym: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    re, im = sym.real, sym.imag
    for _ in range(100):
        r = rng.normal()
        _, p = np.linalg.eigh(re + r * im)
        d = p.T @ sym @ p
        if np.abs(d - np.diag(np.diag(d))).max() < 1e-10:
            if np.linalg.det(p) < 0:
                p[:, 0] *= -1
            return p
    raise DecompositionError("failed to diagonalize symmetric unitary")


def kak(u: np.ndarray) -> KAK:
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise DecompositionError("kak expects a 4x4 matrix")
    det = np.linalg.det(u)
    if abs(abs(det) - 1) > 1e-8:
        raise DecompositionError("matrix is not unitary")
    phase = np.angle(det) / 4
    su = u * np.exp(-1j * phase)
    um = MAGIC.conj().T @ su @ MAGIC
    p = _real_orthogonal_eigvecs(um.T @ um, np.random.default_rng(1234))
    d = np.sqrt(np.diag(p.T @ um.T @ um @ p))
    k1 = um @ p @ np.diag(1 / d)
    if np.linalg.det(k1).real < 0:
        d[0] *= -1
        k1[:, 0] *= -1
    k1c = MAGIC @ k1 @ MAGIC.conj().T
    k2c = MAGIC @ p.T @ MAGIC.conj().T
    x = _DIAG_INV @ np.angle(d)
    extra, a, b, c = x
    # the identity component of the diagonal is a pure phase
    k1l, k1r = factor_local(k1c)
    k2l, k2r = factor_local(k2c)
    result = KAK(float(phase + extra), (float(a), float(b), float(c)), (k1l, k1r), (k2l, k2r))
    if np.abs(result.unitary() - u).max() > 1e-9:
        raise DecompositionError("KAK reconstruction failed")
    return result


def _multiple_of_half_pi(x: float, tol: float) -> int | None:
    k = round(x / (math.pi / 2))
    return k if abs(x - k * math.pi / 2) < tol else None


def _clifford(axis: str) -> np.ndarray:
    return (np.eye(2) + 1j * _P[axis]) / math.sqrt(2)


# (index of trivial coordinate) -> (pair axes, V with V P1 V† = ±X, V P2 V† = ±Z)
_PAIR = {
    2: ("X", "Y", _clifford("X")),
    1: ("X", "Z", np.eye(2, dtype=complex)),
    0: ("Y", "Z", _clifford("Z")),
}


def min_cnots(u: np.ndarray, tol: float = 1e-10) -> int:
    """0 for local unitaries, 2 when a canonical coordinate vanishes mod pi/2, else 3.

    A single CNOT class (one coordinate pi/4, others trivial) is reported as 2.
    """
    coords = kak(u).coords
    trivial = [_multiple_of_half_pi(x, tol) is not None for x in coords]
    if all(trivial):
        return 0
    if any(trivial):
        return 2
    return 3


@dataclass(frozen=True)
class TwoCnotSynthesis:
    """``u = e^{i*phase} (l0 ⊗ l1) CNOT (exp(iaX) ⊗ exp(ibZ)) CNOT (r0 ⊗ r1)``; CNOT control is qubit 0.

    For a local ``u`` ``cnots`` is 0 and only ``r0, r1`` and ``phase`` are meaningful.
    """

    cnots: int
    phase: float
    right: tuple[np.ndarray, np.ndarray]
    middle: tuple[np.ndarray, np.ndarray]
    left: tuple[np.ndarray, np.ndarray]

    def unitary(self) -> np.ndarray:
        r = np.kron(*self.right)
        if self.cnots == 0:
            return np.exp(1j * self.phase) * r
        m = np.kron(*self.middle)
        return np.exp(1j * self.phase) * np.kron(*self.left) @ CNOT01 @ m @ CNOT01 @ r


def synthesize(u: np.ndarray, tol: float = 1e-10) -> TwoCnotSynthesis | None:
    """Exact 0- or 2-CNOT circuit for ``u`` or ``None`` when three are needed."""
    d = kak(u)
    ks = [_multiple_of_half_pi(x, tol) for x in d.coords]
    k1, k2 = np.kron(*d.k1), np.kron(*d.k2)
    if all(k is not None for k in ks):
        local = k1 @ MAGIC @ d.nonlocal_part() @ MAGIC.conj().T @ k2
        r0, r1 = factor_local(local)
        syn = TwoCnotSynthesis(0, d.phase, (r0, r1), (np.eye(2), np.eye(2)), (np.eye(2), np.eye(2)))
    else:
        trivial = [i for i, k in enumerate(ks) if k is not None]
        if not trivial:
            return None
        z = trivial[0]
        kz = ks[z]
        p1, p2, v = _PAIR[z]
        axes = "XYZ"
        rest = [i for i in range(3) if i != z]
        a, b = d.coords[rest[0]], d.coords[rest[1]]
        # exp(i*kz*pi/2 * PzPz) is local: (i PzPz)^kz
        lz = np.linalg.matrix_power(1j * _PP[axes[z]], kz % 4)
        vv = np.kron(v, v)
        right = vv @ lz @ k2
        left = k1 @ vv.conj().T
        r0, r1 = factor_local(right)
        l0, l1 = factor_local(left)
        mid = (math.cos(a) * np.eye(2) + 1j * math.sin(a) * _P["X"], math.cos(b) * np.eye(2) + 1j * math.sin(b) * _P["Z"])
        syn = TwoCnotSynthesis(2, d.phase, (r0, r1), mid, (l0, l1))
    if np.abs(syn.unitary() - u).max() > 1e-9:
        raise DecompositionError("two-CNOT synthesis failed verification")
    return syn
