"""Statevector and density-matrix backends with depolarizing noise and shot sampling."""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .circuit import Circuit, Gate, apply_matrix, gate_matrix

MAX_STATEVECTOR_QUBITS = 20
MAX_DENSITY_QUBITS = 10


class BackendCapError(ValueError):
    """The circuit is too wide for the requested backend."""


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing gate noise plus independent per-qubit readout flips.

    ``readout`` lists ``(p(read 1 | 0), p(read 0 | 1))`` per qubit; qubits past
    its end use ``readout_default``.
    """

    p1: float = 0.0
    p2: float = 0.0
    readout: tuple[tuple[float, float], ...] = ()
    readout_default: tuple[float, float] = (0.0, 0.0)
    p_barrier: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "readout", tuple(tuple(map(float, r)) for r in self.readout))
        object.__setattr__(self, "readout_default", tuple(map(float, self.readout_default)))
        probs = [self.p1, self.p2, self.p_barrier, *self.readout_default]
        probs += [p for r in self.readout for p in r]
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ValueError("noise probabilities must lie in [0, 1]")

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls(name="ideal")

    @classmethod
    def symmetric(cls, p1: float, p2: float, flip: float, name: str = "custom") -> "NoiseModel":
        return cls(p1, p2, readout_default=(flip, flip), name=name)

    @classmethod
    def preset(cls, name: str) -> "NoiseModel":
        try:
            return PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown noise preset {name!r}; choose from {sorted(PRESETS)}") from None

    def readout_for(self, q: int) -> tuple[float, float]:
        return self.readout[q] if q < len(self.readout) else self.readout_default

    @property
    def gate_noiseless(self) -> bool:
        return self.p1 == 0 and self.p2 == 0 and self.p_barrier == 0


PRESETS = {
    "ideal": NoiseModel(name="ideal"),
    "santiago": NoiseModel.symmetric(2.15e-4, 6.0e-3, 1.4e-2, name="santiago"),
    "casablanca": NoiseModel.symmetric(3.5e-3, 3.5e-2, 1.8e-2, name="casablanca"),
}


@dataclass(frozen=True)
class Counts:
    counts: Mapping[str, int]
    shots: int
    basis: str = ""
    seed: int | None = None
    meta: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {k: int(v) for k, v in sorted(self.counts.items()) if v}
        object.__setattr__(self, "counts", clean)
        if sum(clean.values()) != self.shots:
            raise ValueError(f"counts sum to {sum(clean.values())}, expected {self.shots}")
        if len({len(k) for k in clean}) > 1:
            raise ValueError("bitstrings of mixed length")

    @property
    def n_bits(self) -> int:
        return len(next(iter(self.counts))) if self.counts else 0

    def frequencies(self) -> dict[str, float]:
        if not self.shots:
            return {}
        return {k: v / self.shots for k, v in self.counts.items()}

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"basis": self.basis, "bitstring": k, "count": v}) + "\n" for k, v in self.counts.items()
        )

    @classmethod
    def from_jsonl(cls, text: str) -> dict[str, "Counts"]:
        """Group JSON lines by basis label."""
        acc: dict[str, dict[str, int]] = {}
        for line in text.splitlines():
            if line.strip():
                rec = json.loads(line)
                acc.setdefault(rec["basis"], {})[rec["bitstring"]] = int(rec["count"])
        return {b: cls(c, sum(c.values()), b) for b, c in acc.items()}


def _split_measurements(c: Circuit) -> tuple[Circuit, list[tuple[int, int]]]:
    """Drop terminal measurements and return them as (qubit, bit) pairs."""
    measured: dict[int, int] = {}
    body: list[Gate] = []
    for g in c.gates:
        if g.name == "measure":
            measured[g.qubits[0]] = g.clbits[0]
            continue
        if measured and any(q in measured for q in g.qubits) and g.name != "barrier":
            raise ValueError("mid-circuit measurement is not supported")
        body.append(g)
    return Circuit(c.n_qubits, body, c.global_phase), sorted(measured.items(), key=lambda qb: qb[1])


def statevector(c: Circuit) -> np.ndarray:
    n = c.n_qubits
    if n > MAX_STATEVECTOR_QUBITS:
        raise BackendCapError(f"{n} qubits exceeds statevector cap of {MAX_STATEVECTOR_QUBITS}")
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for g in c.gates:
        if g.name == "measure":
            raise ValueError("statevector: circuit contains measurements")
        if g.name == "barrier":
            continue
        psi = apply_matrix(psi, gate_matrix(g), g.qubits, n)
    return psi.reshape(-1) * np.exp(1j * c.global_phase)


def _letters(k: int) -> str:
    return (string.ascii_letters)[:k]


def depolarize(rho: np.ndarray, qubits: Iterable[int], p: float, n: int) -> np.ndarray:
    """``(1-p) rho + p (I/d ⊗ tr_qubits rho)`` on a ``(2,)*2n`` tensor."""
    qubits = list(qubits)
    if p == 0 or not qubits:
        return rho
    lt = _letters(2 * n + 2 * len(qubits))
    rows, cols = list(lt[:n]), list(lt[n:2 * n])
    fresh = lt[2 * n:]
    traced_cols = cols.copy()
    for q in qubits:
        traced_cols[q] = rows[q]
    reduced_out = "".join(r for i, r in enumerate(rows) if i not in qubits) + "".join(
        c for i, c in enumerate(cols) if i not in qubits
    )
    reduced = np.einsum("".join(rows) + "".join(traced_cols) + "->" + reduced_out, rho)
    out_rows, out_cols = rows.copy(), cols.copy()
    eyes, specs = [], []
    for k, q in enumerate(qubits):
        out_rows[q], out_cols[q] = fresh[2 * k], fresh[2 * k + 1]
        eyes.append(np.eye(2) / 2)
        specs.append(fresh[2 * k] + fresh[2 * k + 1])
    mixed = np.einsum(
        ",".join([reduced_out] + specs) + "->" + "".join(out_rows) + "".join(out_cols), reduced, *eyes
    )
    return (1 - p) * rho + p * mixed


def density_matrix(c: Circuit, nm: NoiseModel | None = None) -> np.ndarray:
    """Noisy evolution from |0..0><0..0|; one depolarizing channel after every gate."""
    nm = nm or NoiseModel.ideal()
    n = c.n_qubits
    if n > MAX_DENSITY_QUBITS:
        raise BackendCapError(f"{n} qubits exceeds density-matrix cap of {MAX_DENSITY_QUBITS}")
    rho = np.zeros((2,) * (2 * n), dtype=complex)
    rho[(0,) * (2 * n)] = 1.0
    for g in c.gates:
        if g.name == "measure":
            raise ValueError("density_matrix: circuit contains measurements")
        if g.name == "barrier":
            if nm.p_barrier:
                for q in g.qubits:
                    rho = depolarize(rho, [q], nm.p_barrier, n)
            continue
        m = gate_matrix(g)
        rho = apply_matrix(rho, m, g.qubits, 2 * n)
        rho = apply_matrix(rho, m.conj(), [n + q for q in g.qubits], 2 * n)
        rho = depolarize(rho, g.qubits, nm.p2 if len(g.qubits) == 2 else nm.p1, n)
    dim = 2**n
    return rho.reshape(dim, dim)


def probabilities(state: np.ndarray) -> np.ndarray:
    """Born probabilities of a statevector or density matrix."""
    state = np.asarray(state)
    p = np.abs(state) ** 2 if state.ndim == 1 else np.real(np.diag(state))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def marginal(probs: np.ndarray, qubits: list[int], n: int) -> np.ndarray:
    keep = list(qubits)
    t = probs.reshape((2,) * n)
    drop = tuple(q for q in range(n) if q not in keep)
    t = t.sum(axis=drop) if drop else t
    order = sorted(keep)
    return np.transpose(t, [order.index(q) for q in keep]).reshape(-1)


def confusion_1q(p01: float, p10: float) -> np.ndarray:
    """Column-stochastic: column = true bit, row = read bit."""
    return np.array([[1 - p01, p10], [p01, 1 - p10]])


def apply_readout(probs: np.ndarray, flips: list[tuple[float, float]]) -> np.ndarray:
    k = len(flips)
    t = probs.reshape((2,) * k)
    for q, (p01, p10) in enumerate(flips):
        if p01 or p10:
            t = apply_matrix(t, confusion_1q(p01, p10), [q], k)
    return t.reshape(-1)


def sample_counts(
    state: np.ndarray,
    shots: int,
    nm: NoiseModel | None = None,
    seed: int | None = 0,
    *,
    qubits: list[int] | None = None,
    basis: str = "",
) -> Counts:
    """Sample ``shots`` outcomes of ``qubits`` (default: all) through the readout model."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    nm = nm or NoiseModel.ideal()
    probs = probabilities(state)
    n = int(round(np.log2(probs.size)))
    qubits = list(range(n)) if qubits is None else list(qubits)
    p = apply_readout(marginal(probs, qubits, n), [nm.readout_for(q) for q in qubits])
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    draws = np.random.default_rng(seed).multinomial(shots, p)
    k = len(qubits)
    counts = {format(i, f"0{k}b"): int(v) for i, v in enumerate(draws) if v}
    return Counts(counts, shots, basis, seed)


def exact_distribution(c: Circuit, nm: NoiseModel | None = None) -> tuple[np.ndarray, list[int]]:
    """Readout-corrupted outcome probabilities of the measured qubits (infinite shots)."""
    nm = nm or NoiseModel.ideal()
    body, measured = _split_measurements(c)
    qubits = [q for q, _ in measured] or list(range(c.n_qubits))
    state = statevector(body) if nm.gate_noiseless else density_matrix(body, nm)
    probs = marginal(probabilities(state), qubits, c.n_qubits)
    return apply_readout(probs, [nm.readout_for(q) for q in qubits]), qubits


def execute(c: Circuit, shots: int, nm: NoiseModel | None = None, seed: int | None = 0, basis: str = "") -> Counts:
    """Run ``c`` (terminal measurements optional) and sample its measured register."""
    nm = nm or NoiseModel.ideal()
    body, measured = _split_measurements(c)
    qubits = [q for q, _ in measured] or None
    state = statevector(body) if nm.gate_noiseless else density_matrix(body, nm)
    return sample_counts(state, shots, nm, seed, qubits=qubits, basis=basis)
