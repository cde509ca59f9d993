"""Pauli strings and sums over {I, X, Y, Z}.

Qubit 0 is the leftmost tensor factor, so ``"XIZ"`` means X on qubit 0 and
Z on qubit 2. Coefficients are complex scalars; sums are kept in a canonical
form (sorted by axes, duplicates merged, near-zero terms dropped).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

AXES = "IXYZ"
PRUNE_TOL = 1e-14
MAX_MATRIX_QUBITS = 12

_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# single-qubit products: (a, b) -> (phase, axis) with a·b = phase·axis
_PRODUCT = {}
for _a in AXES:
    for _b in AXES:
        _m = _MATRICES[_a] @ _MATRICES[_b]
        for _c in AXES:
            _ph = np.trace(_MATRICES[_c].conj().T @ _m) / 2
            if abs(_ph) > 0.5:
                _PRODUCT[_a, _b] = (complex(np.round(_ph)), _c)
                break


class DimensionError(ValueError):
    """Operands act on different numbers of qubits, or a size cap is exceeded."""


@dataclass(frozen=True)
class PauliString:
    axes: str
    coeff: complex = 1.0

    def __post_init__(self):
        if any(a not in AXES for a in self.axes):
            raise ValueError(f"invalid Pauli axes {self.axes!r}")
        object.__setattr__(self, "coeff", complex(self.coeff))

    @classmethod
    def from_sparse(cls, n_qubits: int, ops: Mapping[int, str], coeff: complex = 1.0) -> "PauliString":
        """Build from ``{qubit: axis}``, e.g. ``from_sparse(3, {0: "X", 2: "X"})``."""
        axes = ["I"] * n_qubits
        for q, a in ops.items():
            if not 0 <= q < n_qubits:
                raise DimensionError(f"qubit {q} outside register of {n_qubits}")
            axes[q] = a
        return cls("".join(axes), coeff)

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliString":
        return cls("I" * n_qubits, coeff)

    @property
    def n_qubits(self) -> int:
        return len(self.axes)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.axes) if a != "I")

    @property
    def weight(self) -> int:
        return len(self.support)

    def is_identity(self) -> bool:
        return self.weight == 0

    def with_coeff(self, coeff: complex) -> "PauliString":
        return PauliString(self.axes, coeff)

    def adjoint(self) -> "PauliString":
        return PauliString(self.axes, self.coeff.conjugate())

    def commutes_with(self, other: "PauliString") -> bool:
        _check_dims(self, other)
        anti = sum(1 for a, b in zip(self.axes, other.axes) if a != "I" and b != "I" and a != b)
        return anti % 2 == 0

    def to_matrix(self) -> np.ndarray:
        return PauliSum([self], self.n_qubits).to_matrix()

    def __mul__(self, other):
        if isinstance(other, PauliString):
            return mul(self, other)
        if isinstance(other, PauliSum):
            return PauliSum([self], self.n_qubits) * other
        return PauliString(self.axes, self.coeff * other)

    def __rmul__(self, other):
        return PauliString(self.axes, self.coeff * other)

    def __neg__(self):
        return PauliString(self.axes, -self.coeff)

    def __add__(self, other):
        return PauliSum([self], self.n_qubits) + other

    def __sub__(self, other):
        return PauliSum([self], self.n_qubits) - other

    def label(self) -> str:
        ops = [f"{a}{i}" for i, a in enumerate(self.axes) if a != "I"]
        return " ".join(ops) if ops else "I"

    def __str__(self) -> str:
        return f"{_format_coeff(self.coeff)} * {self.label()}"


def _format_coeff(c: complex) -> str:
    if abs(c.imag) < PRUNE_TOL:
        return f"{c.real:.12g}"
    if abs(c.real) < PRUNE_TOL:
        return f"{c.imag:.12g}j"
    return f"({c.real:.12g}{c.imag:+.12g}j)"


def _check_dims(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")


def mul(a: PauliString, b: PauliString) -> PauliString:
    """Product ``a·b`` with the phase accumulated into the coefficient."""
    _check_dims(a, b)
    phase = 1 + 0j
    axes = []
    for x, y in zip(a.axes, b.axes):
        ph, c = _PRODUCT[x, y]
        phase *= ph
        axes.append(c)
    return PauliString("".join(axes), a.coeff * b.coeff * phase)


class PauliSum:
    """Immutable canonical sum of Pauli strings on a common register."""

    __slots__ = ("_terms", "_n")

    def __init__(self, terms: Iterable[PauliString] = (), n_qubits: int | None = None):
        terms = list(terms)
        if n_qubits is None:
            if not terms:
                raise ValueError("n_qubits required for an empty PauliSum")
            n_qubits = terms[0].n_qubits
        acc: dict[str, complex] = {}
        for t in terms:
            if t.n_qubits != n_qubits:
                raise DimensionError(f"term {t.axes} does not act on {n_qubits} qubits")
            acc[t.axes] = acc.get(t.axes, 0j) + t.coeff
        self._n = n_qubits
        self._terms = tuple(
            PauliString(k, _clean(v)) for k, v in sorted(acc.items()) if abs(v) >= PRUNE_TOL
        )

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls((), n_qubits)

    @property
    def n_qubits(self) -> int:
        return self._n

    @property
    def terms(self) -> tuple[PauliString, ...]:
        return self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self._n == other._n and self.isclose(other, 0.0)

    def __hash__(self):
        return hash((self._n, self._terms))

    def isclose(self, other: "PauliSum", atol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(t.coeff) <= atol for t in diff)

    def coeff_of(self, axes: str) -> complex:
        for t in self._terms:
            if t.axes == axes:
                return t.coeff
        return 0j

    def _coerce(self, other) -> "PauliSum":
        if isinstance(other, PauliSum):
            if other.n_qubits != self._n:
                raise DimensionError(f"qubit count mismatch: {self._n} vs {other.n_qubits}")
            return other
        if isinstance(other, PauliString):
            return PauliSum([other], self._n)
        return PauliSum([PauliString.identity(self._n, other)], self._n)

    def __add__(self, other):
        other = self._coerce(other)
        return PauliSum(self._terms + other._terms, self._n)

    __radd__ = __add__

    def __neg__(self):
        return PauliSum([-t for t in self._terms], self._n)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (PauliSum, PauliString)):
            other = self._coerce(other)
            return PauliSum((mul(a, b) for a in self._terms for b in other._terms), self._n)
        return PauliSum([t * other for t in self._terms], self._n)

    def __rmul__(self, other):
        if isinstance(other, PauliString):
            return self._coerce(other) * self
        return self * other

    def adjoint(self) -> "PauliSum":
        return PauliSum([t.adjoint() for t in self._terms], self._n)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return all(abs(t.coeff.imag) <= atol for t in self._terms)

    def filter(self, pred) -> "PauliSum":
        return PauliSum([t for t in self._terms if pred(t)], self._n)

    def to_matrix(self) -> np.ndarray:
        return to_matrix(self)

    def __repr__(self) -> str:
        return f"PauliSum({str(self)!r}, n_qubits={self._n})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        return " + ".join(str(t) for t in self._terms)


def _clean(c: complex) -> complex:
    re = 0.0 if abs(c.real) < PRUNE_TOL else c.real
    im = 0.0 if abs(c.imag) < PRUNE_TOL else c.imag
    return complex(re, im)


def commutator(a: PauliString, b: PauliString) -> PauliSum:
    """``ab - ba``; an empty sum means the strings commute."""
    _check_dims(a, b)
    if a.commutes_with(b):
        return PauliSum.zero(a.n_qubits)
    p = mul(a, b)
    return PauliSum([p.with_coeff(2 * p.coeff)], a.n_qubits)


def commutes_pairwise(s: PauliSum) -> bool:
    return all(a.commutes_with(b) for a, b in itertools.combinations(s.terms, 2))


def to_matrix(s: PauliSum | PauliString) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix; qubit 0 is the most significant index bit."""
    if isinstance(s, PauliString):
        s = PauliSum([s], s.n_qubits)
    n = s.n_qubits
    if n > MAX_MATRIX_QUBITS:
        raise DimensionError(f"{n} qubits exceeds dense cap of {MAX_MATRIX_QUBITS}")
    out = np.zeros((2**n, 2**n), dtype=complex)
    for t in s.terms:
        m = np.ones((1, 1), dtype=complex)
        for a in t.axes:
            m = np.kron(m, _MATRICES[a])
        out += t.coeff * m
    return out


def sigma_plus(n_qubits: int, k: int) -> PauliSum:
    """(X + iY)/2 on qubit k; maps |1> to |0>."""
    return PauliSum(
        [PauliString.from_sparse(n_qubits, {k: "X"}, 0.5), PauliString.from_sparse(n_qubits, {k: "Y"}, 0.5j)],
        n_qubits,
    )


def sigma_minus(n_qubits: int, k: int) -> PauliSum:
    """(X - iY)/2 on qubit k; maps |0> to |1>."""
    return PauliSum(
        [PauliString.from_sparse(n_qubits, {k: "X"}, 0.5), PauliString.from_sparse(n_qubits, {k: "Y"}, -0.5j)],
        n_qubits,
    )


def parse(text: str, n_qubits: int) -> PauliString:
    """Parse the ``"0.5 * X0 Y2"`` rendering (real coefficients only)."""
    coeff, _, ops = text.partition("*")
    if not ops:
        coeff, ops = "1", text
    sparse = {}
    for tok in ops.split():
        if tok == "I":
            continue
        sparse[int(tok[1:])] = tok[0]
    return PauliString.from_sparse(n_qubits, sparse, complex(coeff.strip().strip("()")))
