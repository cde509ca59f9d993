"""Post-processing of measurement counts: post-selection, readout mitigation,
Pauli expectations, linear-inversion tomography and fidelity estimators.

Distributions are plain ``{bitstring: weight}`` mappings; raw ``Counts`` are
accepted wherever a distribution is expected and normalized on the fly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np
from scipy.linalg import expm
from scipy.optimize import nnls

from .bosons import BosonRegister, FockState, codeword_indices, embed, fock_to_bitstring
from .circuit import Circuit, X
from .pauli import PauliString, PauliSum
from .sim import Counts, NoiseModel, confusion_1q

Distribution = Mapping[str, float]
CountsLike = Union[Counts, Distribution]

MAX_TOMOGRAPHY_QUBITS = 4
FIDELITY_TOL = 1e-9


class MeasurementError(ValueError):
    pass


class MissingBasisError(MeasurementError):
    pass


class DegenerateResultError(MeasurementError):
    """Post-selection kept nothing, so the estimate is undefined."""


def _weights(c: CountsLike) -> dict[str, float]:
    return dict(c.counts) if isinstance(c, Counts) else dict(c)


def normalize(c: CountsLike) -> dict[str, float]:
    w = _weights(c)
    total = sum(w.values())
    if total <= 0:
        raise DegenerateResultError("empty distribution")
    return {k: v / total for k, v in w.items()}


def distribution_from_array(probs: np.ndarray, tol: float = 0.0) -> dict[str, float]:
    k = int(round(math.log2(len(probs))))
    return {format(i, f"0{k}b"): float(p) for i, p in enumerate(probs) if p > tol}


# --- post-selection ---------------------------------------------------------------


def post_select(c: CountsLike, codewords: Iterable[str]) -> tuple[CountsLike, float]:
    """Keep codeword outcomes only; returns the restricted data and the kept fraction.

    ``Counts`` stay ``Counts`` (with reduced shots); distributions stay
    unnormalized so the caller decides when to renormalize.
    """
    keep = set(codewords)
    w = _weights(c)
    total = sum(w.values())
    kept = {k: v for k, v in w.items() if k in keep}
    frac = sum(kept.values()) / total if total else 0.0
    if isinstance(c, Counts):
        return Counts(kept, int(sum(kept.values())), c.basis, c.seed), frac
    return kept, frac


# --- readout calibration and mitigation ----------------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    """Tensor-product readout model; ``mats[k][read, true]`` for bit k."""

    mats: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = tuple(np.asarray(m, dtype=float) for m in self.mats)
        for m in mats:
            if m.shape != (2, 2) or np.any(m < -1e-12) or np.any(m > 1 + 1e-12):
                raise MeasurementError("confusion entries must lie in [0, 1]")
            if not np.allclose(m.sum(axis=0), 1.0, atol=1e-12):
                raise MeasurementError("confusion columns must sum to 1")
        object.__setattr__(self, "mats", mats)

    @classmethod
    def identity(cls, n: int) -> "ConfusionMatrix":
        return cls(tuple(np.eye(2) for _ in range(n)))

    @property
    def n_bits(self) -> int:
        return len(self.mats)

    def full(self) -> np.ndarray:
        out = np.ones((1, 1))
        for m in self.mats:
            out = np.kron(out, m)
        return out

    def apply(self, probs: np.ndarray) -> np.ndarray:
        return self.full() @ np.asarray(probs, dtype=float)


def calibration_circuits(n_qubits: int) -> dict[str, Circuit]:
    """All-zeros and all-ones preparations, enough for a tensor-product model."""
    return {
        "0" * n_qubits: Circuit(n_qubits),
        "1" * n_qubits: Circuit(n_qubits, tuple(X(q) for q in range(n_qubits))),
    }


def calibration_confusion(
    source: NoiseModel | Mapping[str, Counts], n_qubits: int | None = None
) -> ConfusionMatrix:
    """Per-qubit confusion from a noise model or from calibration counts.

    Calibration counts are keyed by the prepared bitstring; flip rates are the
    pooled maximum-likelihood frequencies over all preparations.
    """
    if isinstance(source, NoiseModel):
        if n_qubits is None:
            raise MeasurementError("n_qubits required with a noise model")
        return ConfusionMatrix(tuple(confusion_1q(*source.readout_for(q)) for q in range(n_qubits)))
    if not source:
        raise MeasurementError("no calibration counts")
    n = len(next(iter(source)))
    flips = np.zeros((n, 2))
    trials = np.zeros((n, 2))
    for prepared, counts in source.items():
        if counts.shots == 0:
            raise MeasurementError("zero-shot calibration run")
        for bits, v in counts.counts.items():
            for q in range(n):
                t = int(prepared[q])
                trials[q, t] += v
                flips[q, t] += v * (bits[q] != prepared[q])
    if np.any(trials == 0):
        raise MeasurementError("calibration must prepare both 0 and 1 on every qubit")
    rates = flips / trials
    return ConfusionMatrix(tuple(confusion_1q(rates[q, 0], rates[q, 1]) for q in range(n)))


def mitigate(c: CountsLike, A: ConfusionMatrix, tol: float = 1e-12) -> dict[str, float]:
    """Nearest probability vector under the readout model.

    Solves ``min ||A x - c||`` over the simplex: the unconstrained inverse is
    used when it is already a distribution, otherwise a non-negative least
    squares with a heavily weighted normalization row.
    """
    n = A.n_bits
    p = normalize(c)
    vec = np.zeros(2**n)
    for k, v in p.items():
        if len(k) != n:
            raise MeasurementError(f"bitstring {k!r} does not match {n}-bit confusion model")
        vec[int(k, 2)] = v
    full = A.full()
    try:
        x = np.linalg.solve(full, vec)
    except np.linalg.LinAlgError:
        raise MeasurementError("confusion matrix is singular") from None
    if x.min() < -tol:
        w = 1e4
        aug = np.vstack([full, w * np.ones((1, full.shape[1]))])
        x, _ = nnls(aug, np.append(vec, w), maxiter=50 * full.shape[1])
    x = np.clip(x, 0.0, None)
    x /= x.sum()
    return distribution_from_array(x)


# --- expectations and tomography ---------------------------------------------------------

_MODE_SIGN = {"01": 1, "10": -1}


@dataclass(frozen=True)
class TomogramSet:
    """Measured distributions keyed by basis label.

    ``level="qubit"``: one X/Y/Z letter per qubit, outcome sign from bit parity.
    ``level="mode"``: one letter per two-qubit mode; each mode block "01" counts
    as eigenvalue +1 and "10" as -1 (other blocks are treated as unphysical).
    """

    bases: Mapping[str, CountsLike]
    level: str = "qubit"
    retained: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.level not in ("qubit", "mode"):
            raise MeasurementError(f"unknown level {self.level!r}")
        lengths = {len(b) for b in self.bases}
        if len(lengths) > 1:
            raise MeasurementError("basis labels of mixed length")

    @property
    def n_sites(self) -> int:
        return len(next(iter(self.bases))) if self.bases else 0

    def compatible(self, label: str) -> list[str]:
        return [b for b in self.bases if all(o == "I" or o == bb for o, bb in zip(label, b))]

    def mean_retained(self) -> float:
        return float(np.mean(list(self.retained.values()))) if self.retained else 1.0


def _site_outcomes(bits: str, level: str) -> list[int] | None:
    if level == "qubit":
        return [1 - 2 * int(b) for b in bits]
    out = []
    for k in range(0, len(bits), 2):
        s = _MODE_SIGN.get(bits[k:k + 2])
        if s is None:
            return None
        out.append(s)
    return out


def _expect_one(dist: CountsLike, label: str, level: str) -> float:
    num = den = 0.0
    for bits, w in _weights(dist).items():
        signs = _site_outcomes(bits, level)
        if signs is None:
            continue
        val = 1
        for o, s in zip(label, signs):
            if o != "I":
                val *= s
        num += w * val
        den += w
    if den <= 0:
        raise DegenerateResultError("no usable outcomes for expectation")
    return num / den


def expectation(t: TomogramSet, label: str, level: str | None = None) -> float:
    """Mean of a Pauli label (``I`` allowed), averaged over every compatible basis."""
    level = level or t.level
    if len(label) != t.n_sites:
        raise MeasurementError(f"label {label!r} does not match {t.n_sites} sites")
    if set(label) <= {"I"}:
        return 1.0
    bases = t.compatible(label)
    if not bases:
        raise MissingBasisError(f"no measured basis supports {label!r}")
    return float(np.mean([_expect_one(t.bases[b], label, level) for b in bases]))


@dataclass(frozen=True)
class TomographyResult:
    rho: np.ndarray
    min_eigenvalue: float
    projected: bool = False

    @property
    def physical(self) -> bool:
        return self.min_eigenvalue >= -1e-10


def _project_psd(rho: np.ndarray) -> np.ndarray:
    """Closest unit-trace PSD matrix in Frobenius norm (eigenvalue simplex projection)."""
    vals, vecs = np.linalg.eigh(rho)
    mu = np.sort(vals)[::-1]
    css = np.cumsum(mu) - 1
    k = np.nonzero(mu - css / np.arange(1, len(mu) + 1) > 0)[0][-1]
    lam = np.clip(vals - css[k] / (k + 1), 0, None)
    return (vecs * lam) @ vecs.conj().T


def tomography(t: TomogramSet, project: bool = False) -> TomographyResult:
    """Linear inversion ``rho = sum_P <P> P / 2^n`` over all ``4^n`` labels."""
    n = t.n_sites
    if n > MAX_TOMOGRAPHY_QUBITS:
        raise MeasurementError(f"tomography limited to {MAX_TOMOGRAPHY_QUBITS} sites")
    missing = ["".join(b) for b in itertools.product("XYZ", repeat=n) if "".join(b) not in t.bases]
    if missing:
        raise MissingBasisError(f"incomplete tomogram, missing {missing[:3]}...")
    rho = np.zeros((2**n, 2**n), dtype=complex)
    for axes in itertools.product("IXYZ", repeat=n):
        label = "".join(axes)
        rho += expectation(t, label) * PauliString(label).to_matrix()
    rho /= 2**n
    rho = (rho + rho.conj().T) / 2
    if project:
        rho = _project_psd(rho)
    return TomographyResult(rho, float(np.linalg.eigvalsh(rho).min()), project)


# --- reference states ------------------------------------------------------------------------


def perturbative_state_sm(epsilon: float, sign: int = 1) -> np.ndarray:
    """Normalized ``(1 - eps^2)|0> + sign*i*sqrt(2)*eps|2>`` on the 3-qubit register.

    ``sign=+1`` agrees with exact evolution under ``exp(+i eps (b†² + b²))``
    and with the tomographic fidelity formula; ``sign=-1`` is the opposite
    convention.
    """
    if abs(epsilon) >= 0.5:
        raise ValueError("perturbative state needs |epsilon| < 0.5")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    v = np.array([1 - epsilon**2, 0, sign * 1j * math.sqrt(2) * epsilon], dtype=complex)
    return embed(BosonRegister(1, 2), v / np.linalg.norm(v))


def bs_exact_state(epsilon: float, level: str = "qubit") -> np.ndarray:
    """``cos(eps)|1>|0> + i sin(eps)|0>|1>`` as a 16-amplitude register or 4-amplitude mode state."""
    v = np.zeros(4, dtype=complex)
    v[0b10] = math.cos(epsilon)
    v[0b01] = 1j * math.sin(epsilon)
    if level == "mode":
        return v
    if level != "qubit":
        raise ValueError(f"unknown level {level!r}")
    return embed(BosonRegister(2, 1), v)


def evolved_state(h: PauliSum, epsilon: float, initial: np.ndarray) -> np.ndarray:
    """Dense oracle ``exp(i eps h) |initial>``."""
    return expm(1j * epsilon * h.to_matrix()) @ np.asarray(initial, dtype=complex)


def basis_state(reg: BosonRegister, f: FockState) -> np.ndarray:
    v = np.zeros(2**reg.n_qubits, dtype=complex)
    v[int(fock_to_bitstring(reg, f), 2)] = 1.0
    return v


def mode_density(reg: BosonRegister, rho: np.ndarray) -> tuple[np.ndarray, float]:
    """Codeword block of a register ``rho`` (renormalized) and its weight.

    For one excitation per mode the block is a ``2^N x 2^N`` mode-level state.
    """
    idx = codeword_indices(reg)
    block = np.asarray(rho)[np.ix_(idx, idx)]
    w = float(np.real(np.trace(block)))
    if w <= 0:
        raise DegenerateResultError("no weight on codewords")
    return block / w, w


# --- fidelities --------------------------------------------------------------------------------


def fidelity_pure(psi: np.ndarray, rho: np.ndarray) -> float:
    psi = np.asarray(psi, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    if rho.shape != (psi.size, psi.size):
        raise MeasurementError(f"dimension mismatch: state {psi.size}, density {rho.shape}")
    return float(np.real(psi.conj() @ rho @ psi))


# (label, weight key); weights: one, cross, diag, minus
SM_TERMS = (
    ("III", "one"),
    ("ZZZ", "one"),
    ("XZY", "cross"),
    ("YIX", "cross"),
    ("XIY", "cross_neg"),
    ("YZX", "cross_neg"),
    ("ZII", "diag"),
    ("IZZ", "diag"),
    ("IIZ", "diag_neg"),
    ("ZZI", "diag_neg"),
    ("IZI", "minus"),
    ("ZIZ", "minus"),
)


def sm_fidelity_weights(epsilon: float, printed: bool = False) -> dict[str, float]:
    """Weights of the squeezing fidelity expansion.

    ``printed=True`` gives the second-order coefficients ``2√2ε`` and
    ``1 - 4ε²``; the default uses the exact values for the normalized
    perturbative state so the estimator equals ``fidelity_pure`` on any rho.
    """
    if printed:
        cross, diag = 2 * math.sqrt(2) * epsilon, 1 - 4 * epsilon**2
    else:
        a, b = 1 - epsilon**2, math.sqrt(2) * epsilon
        norm = a * a + b * b
        cross, diag = 2 * a * b / norm, (a * a - b * b) / norm
    return {"one": 1.0, "cross": cross, "cross_neg": -cross, "diag": diag, "diag_neg": -diag, "minus": -1.0}


def fidelity_sm_tomographic(t: TomogramSet, epsilon: float, printed: bool = False) -> float:
    """Fidelity with the perturbative squeezed state from 3-qubit Pauli expectations."""
    if t.level != "qubit" or t.n_sites != 3:
        raise MeasurementError("squeezing fidelity needs a 3-qubit qubit-level tomogram")
    w = sm_fidelity_weights(epsilon, printed)
    return sum(w[key] * expectation(t, label) for label, key in SM_TERMS) / 8


def fidelity_bs_tomographic(t: TomogramSet, epsilon: float) -> float:
    """Fidelity with the beam-splitter target from mode-level expectations."""
    if t.level != "mode" or t.n_sites != 2:
        raise MeasurementError("beam-splitter fidelity needs a 2-mode mode-level tomogram")
    s2, c = math.sin(2 * epsilon), 1 - 2 * math.cos(epsilon) ** 2
    e = lambda label: expectation(t, label)  # noqa: E731
    return (1 - e("ZZ") + s2 * (e("XY") - e("YX")) + c * (e("ZI") - e("IZ"))) / 4


def fidelity_p0(c: CountsLike, reg: BosonRegister, reference: FockState | None = None) -> float:
    """Relative frequency of the vacuum (or ``reference``) codeword."""
    target = fock_to_bitstring(reg, reference or FockState((0,) * reg.n_modes))
    w = _weights(c)
    total = sum(w.values())
    if total <= 0:
        raise DegenerateResultError("no retained shots")
    return w.get(target, 0.0) / total
