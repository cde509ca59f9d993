"""Gate IR and the Pauli-evolution compiler.

``exp(i*theta*P)`` for a Pauli string P is realized as ``U† exp(±i*theta*Z_p) U``
where p is the lowest non-identity qubit (the pivot) and U is a product of
``exp(i*pi/4*G)`` Clifford rotations:

* ``G = X_p`` turns ``Z_p`` into ``-Y_p``;
* ``G = Z_p X_j`` for every other support qubit j extends the string to j
  (one CNOT each, since ``exp(i*pi/4*Z_p X_j) = e^{-i*pi/4} exp(i*pi/4*X_j)
  exp(i*pi/4*Z_p) CNOT(p, j)``);
* trailing single-qubit rotations turn each X into the requested axis.

The X_j rotations of the ladder commute with the CNOTs and with everything
on the pivot, so they cancel against their inverses and are never emitted.

Circuits record gates in time order. A product of exponentials written left
to right as an operator therefore appears reversed in the gate list.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .bosons import BosonRegister, FockState, fock_to_bitstring
from .pauli import PauliString, PauliSum, commutes_pairwise, mul

ATOL = 1e-12
MAX_UNITARY_QUBITS = 12

SINGLE_QUBIT = frozenset({"u1", "u2", "u3", "x", "h", "s", "sdg"})
DIAGONAL = frozenset({"u1", "s", "sdg"})


class CompileError(ValueError):
    pass


class SchemeError(CompileError):
    """Requested Trotter scheme is invalid for the Hamiltonian."""


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    clbits: tuple[int, ...] = ()

    @property
    def is_single_qubit(self) -> bool:
        return self.name in SINGLE_QUBIT

    @property
    def is_diagonal(self) -> bool:
        return self.name in DIAGONAL

    def matrix(self) -> np.ndarray:
        return gate_matrix(self)

    def __str__(self) -> str:
        qs = " ".join(f"q{q}" for q in self.qubits)
        if self.name == "measure":
            return f"measure q{self.qubits[0]} -> c{self.clbits[0]}"
        if self.params:
            ps = ", ".join(f"{p:.6g}" for p in self.params)
            return f"{self.name}({ps}) {qs}"
        return f"{self.name} {qs}"


def U1(lam: float, q: int) -> Gate:
    return Gate("u1", (q,), (float(lam),))


def U2(phi: float, lam: float, q: int) -> Gate:
    return Gate("u2", (q,), (float(phi), float(lam)))


def U3(theta: float, phi: float, lam: float, q: int) -> Gate:
    return Gate("u3", (q,), (float(theta), float(phi), float(lam)))


def CNOT(control: int, target: int) -> Gate:
    if control == target:
        raise ValueError("CNOT control and target must differ")
    return Gate("cx", (control, target))


def X(q: int) -> Gate:
    return Gate("x", (q,))


def H(q: int) -> Gate:
    return Gate("h", (q,))


def S(q: int) -> Gate:
    return Gate("s", (q,))


def Sdg(q: int) -> Gate:
    return Gate("sdg", (q,))


def Barrier(qubits: Iterable[int]) -> Gate:
    return Gate("barrier", tuple(qubits))


def Measure(q: int, bit: int | None = None) -> Gate:
    return Gate("measure", (q,), (), (q if bit is None else bit,))


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -cmath.exp(1j * lam) * s], [cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c]],
        dtype=complex,
    )


_FIXED = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "h": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "s": np.diag([1, 1j]).astype(complex),
    "sdg": np.diag([1, -1j]).astype(complex),
    "cx": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}


def gate_matrix(g: Gate) -> np.ndarray:
    """Matrix on ``g.qubits`` in the listed order (first qubit most significant)."""
    if g.name in _FIXED:
        return _FIXED[g.name]
    if g.name == "u1":
        return np.diag([1, cmath.exp(1j * g.params[0])]).astype(complex)
    if g.name == "u2":
        return u3_matrix(math.pi / 2, *g.params)
    if g.name == "u3":
        return u3_matrix(*g.params)
    raise CompileError(f"gate {g.name!r} has no matrix")


def zyz_angles(m: np.ndarray) -> tuple[float, float, float, float]:
    """Return ``(theta, phi, lam, phase)`` with ``m = e^{i*phase} U3(theta, phi, lam)``."""
    m = np.asarray(m, dtype=complex)
    det = np.linalg.det(m)
    if abs(abs(det) - 1) > 1e-8:
        raise CompileError("matrix is not unitary")
    a, b = abs(m[0, 0]), abs(m[1, 0])
    theta = 2 * math.atan2(b, a)
    # near the poles only phi + lam is defined; read it off the large entries
    if b < 1e-12:
        phase = cmath.phase(m[0, 0])
        return 0.0, 0.0, _wrap(cmath.phase(m[1, 1]) - phase), phase
    if a < 1e-12:
        phase = cmath.phase(-m[0, 1])
        return theta, _wrap(cmath.phase(m[1, 0]) - phase), 0.0, phase
    phase = cmath.phase(m[0, 0])
    phi = _wrap(cmath.phase(m[1, 0]) - phase)
    lam = _wrap(cmath.phase(-m[0, 1]) - phase)
    return theta, phi, lam, phase


def _wrap(x: float) -> float:
    y = math.remainder(x, 2 * math.pi)
    return math.pi if abs(y + math.pi) < 1e-15 else y


def single_qubit_gate(m: np.ndarray, q: int, *, allow_u2: bool = True) -> tuple[Gate | None, float]:
    """Cheapest U-gate for a 2x2 unitary and the dropped phase.

    Returns ``(None, phase)`` when ``m`` is the identity up to phase.
    """
    theta, phi, lam, phase = zyz_angles(m)
    if abs(theta) < 1e-12:
        if abs(_wrap(lam)) < 1e-12:
            return None, phase
        return U1(lam, q), phase
    if allow_u2 and abs(theta - math.pi / 2) < 1e-12:
        return U2(phi, lam, q), phase
    return U3(theta, phi, lam, q), phase


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    global_phase: float = 0.0
    n_clbits: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.n_qubits:
                    raise CompileError(f"{g} touches qubit {q} outside register of {self.n_qubits}")
            for b in g.clbits:
                if not 0 <= b < self.n_clbits:
                    raise CompileError(f"{g} writes bit {b} outside {self.n_clbits} classical bits")

    def append(self, *gates: Gate, phase: float = 0.0) -> "Circuit":
        return replace(self, gates=self.gates + gates, global_phase=self.global_phase + phase)

    def compose(self, other: "Circuit") -> "Circuit":
        """``other`` runs after ``self``."""
        if other.n_qubits != self.n_qubits:
            raise CompileError("cannot compose circuits of different width")
        return Circuit(
            self.n_qubits,
            self.gates + other.gates,
            self.global_phase + other.global_phase,
            max(self.n_clbits, other.n_clbits),
        )

    def __add__(self, other: "Circuit") -> "Circuit":
        return self.compose(other)

    def without_measurements(self) -> "Circuit":
        return replace(self, gates=tuple(g for g in self.gates if g.name != "measure"), n_clbits=0)

    def measured(self) -> list[tuple[int, int]]:
        return [(g.qubits[0], g.clbits[0]) for g in self.gates if g.name == "measure"]

    def __len__(self) -> int:
        return len(self.gates)

    def __str__(self) -> str:
        lines = [f"# {self.n_qubits} qubits, global phase {self.global_phase:.12g}"]
        lines.extend(str(g) for g in self.gates)
        return "\n".join(lines)


def apply_matrix(tensor: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply ``mat`` to axes ``qubits`` of a tensor whose first n axes are qubits."""
    k = len(qubits)
    mt = mat.reshape((2,) * (2 * k))
    out = np.tensordot(mt, tensor, axes=(list(range(k, 2 * k)), list(qubits)))
    # tensordot puts the new axes first; move them back into place
    return np.moveaxis(out, list(range(k)), list(qubits))


def unitary_of(c: Circuit) -> np.ndarray:
    n = c.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise CompileError(f"{n} qubits exceeds dense cap of {MAX_UNITARY_QUBITS}")
    dim = 2**n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in c.gates:
        if g.name == "measure":
            raise CompileError("unitary_of: circuit contains measurements")
        if g.name == "barrier":
            continue
        u = apply_matrix(u, gate_matrix(g), g.qubits, n)
    return u.reshape(dim, dim) * cmath.exp(1j * c.global_phase)


# --- Pauli evolution -----------------------------------------------------------

_ROT = {
    # (current axis, wanted axis) -> generator G with exp(-i pi/4 G) Q exp(i pi/4 G) = ±wanted
    ("X", "Y"): "Z",
    ("Y", "X"): "Z",
    ("X", "Z"): "Y",
    ("Y", "Z"): "X",
}

_SQ = {"X": _FIXED["x"], "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1.0, -1.0]).astype(complex)}


def _clifford_rotation(axis: str, sign: float = 1.0) -> np.ndarray:
    """``exp(i*sign*pi/4*sigma_axis)``."""
    return (np.eye(2) + 1j * sign * _SQ[axis]) / math.sqrt(2)


def _conjugate(q: PauliString, g: PauliString) -> PauliString:
    """``exp(-i pi/4 G) Q exp(i pi/4 G)`` for anticommuting Q, G."""
    if q.commutes_with(g):
        raise CompileError(f"rotation {g.axes} does not act on {q.axes}")
    return mul(q, g) * 1j


@dataclass(frozen=True)
class _Ladder:
    pivot: int
    targets: tuple[int, ...]
    fixes: tuple[tuple[int, str], ...]
    sign: float


def _plan(p: PauliString) -> _Ladder:
    n, support = p.n_qubits, p.support
    pivot, targets = support[0], support[1:]
    q = PauliString.from_sparse(n, {pivot: "Z"})
    q = _conjugate(q, PauliString.from_sparse(n, {pivot: "X"}))
    for j in targets:
        q = _conjugate(q, PauliString.from_sparse(n, {pivot: "Z", j: "X"}))
    fixes = []
    for j in support:
        have, want = q.axes[j], p.axes[j]
        if have != want:
            gen = _ROT[have, want]
            q = _conjugate(q, PauliString.from_sparse(n, {j: gen}))
            fixes.append((j, gen))
    if q.axes != p.axes or abs(abs(q.coeff) - 1) > ATOL or abs(q.coeff.imag) > ATOL:
        raise CompileError(f"conjugation plan failed for {p.axes}: got {q}")
    return _Ladder(pivot, targets, tuple(fixes), q.coeff.real)


def _z_rotation(alpha: float, q: int) -> tuple[Gate, float]:
    """``exp(i*alpha*Z) = e^{i*alpha} U1(-2*alpha)``."""
    return U1(-2 * alpha, q), alpha


def _center(alpha: float, pivot: int, n: int, steps: int, barriers: bool) -> tuple[list[Gate], float]:
    gates, phase = [], 0.0
    for k in range(steps):
        if k and barriers:
            gates.append(Barrier(range(n)))
        g, ph = _z_rotation(alpha / steps, pivot)
        gates.append(g)
        phase += ph
    return gates, phase


def exp_pauli_term(theta: float, p: PauliString, *, steps: int = 1, insert_barriers: bool = False) -> Circuit:
    """Circuit for ``exp(i*theta*c*P)`` where ``c`` is the (real) coefficient of ``p``.

    ``steps > 1`` splits the central Z rotation into equal slices, optionally
    separated by barriers over the whole register.
    """
    if p.is_identity():
        raise CompileError("identity string is a pure phase; fold it into global_phase")
    if abs(p.coeff.imag) > ATOL:
        raise CompileError(f"non-real coefficient {p.coeff} gives a non-unitary exponential")
    if steps < 1:
        raise CompileError("steps must be >= 1")
    theta = theta * p.coeff.real
    n = p.n_qubits
    if p.weight == 1:
        (q,) = p.support
        axis = p.axes[q]
        if axis == "Z":
            gates, phase = _center(theta, q, n, steps, insert_barriers)
            return Circuit(n, gates, phase)
        gates, phase = [], 0.0
        step = theta / steps
        m = math.cos(step) * np.eye(2) + 1j * math.sin(step) * _SQ[axis]
        for k in range(steps):
            if k and insert_barriers:
                gates.append(Barrier(range(n)))
            g, ph = single_qubit_gate(m, q)
            phase += ph
            if g is not None:
                gates.append(g)
        return Circuit(n, gates, phase)

    plan = _plan(p)
    piv, w = plan.pivot, p.weight
    before: list[Gate] = []
    phase = 0.0
    for j, gen in sorted(plan.fixes):
        g, ph = single_qubit_gate(_clifford_rotation(gen), j)
        before.append(g)
        phase += ph
    before.extend(CNOT(piv, t) for t in plan.targets)
    pre = _clifford_rotation("X") @ np.linalg.matrix_power(_clifford_rotation("Z"), w - 1)
    g_pre, ph_pre = single_qubit_gate(pre, piv)
    g_post, ph_post = single_qubit_gate(pre.conj().T, piv)
    center, ph_c = _center(plan.sign * theta, piv, n, steps, insert_barriers)
    after: list[Gate] = []
    after.extend(CNOT(piv, t) for t in reversed(plan.targets))
    for j, gen in sorted(plan.fixes, reverse=True):
        g, ph = single_qubit_gate(_clifford_rotation(gen, -1.0), j)
        after.append(g)
        phase += ph
    gates = before + [g_pre] + center + [g_post] + after
    return Circuit(n, gates, phase + ph_pre + ph_post + ph_c)


@dataclass(frozen=True)
class TrotterScheme:
    kind: str = "exact"
    steps: int = 1
    insert_barriers: bool = False

    KINDS = ("exact", "first_order", "symmetric")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise SchemeError(f"unknown scheme {self.kind!r}; expected one of {self.KINDS}")
        if self.steps < 1:
            raise SchemeError("steps must be >= 1")

    @classmethod
    def exact(cls) -> "TrotterScheme":
        return cls("exact")

    @classmethod
    def first_order(cls, steps: int, insert_barriers: bool = False) -> "TrotterScheme":
        return cls("first_order", steps, insert_barriers)

    @classmethod
    def symmetric(cls, steps: int = 1, insert_barriers: bool = False) -> "TrotterScheme":
        return cls("symmetric", steps, insert_barriers)


def commuting_groups(h: PauliSum) -> list[list[PauliString]]:
    """Greedy partition into mutually commuting groups.

    Terms are bundled by support; bundles are visited in sorted-support order
    and placed into the first group they commute with entirely.
    """
    bundles: dict[tuple[int, ...], list[PauliString]] = {}
    for t in h.terms:
        if not t.is_identity():
            bundles.setdefault(t.support, []).append(t)
    groups: list[list[PauliString]] = []
    for support in sorted(bundles):
        pieces = [bundles[support]] if commutes_pairwise(PauliSum(bundles[support])) else [[t] for t in bundles[support]]
        for piece in pieces:
            for grp in groups:
                if all(a.commutes_with(b) for a in piece for b in grp):
                    grp.extend(piece)
                    break
            else:
                groups.append(list(piece))
    for grp in groups:
        grp.sort(key=lambda t: t.axes)
    return groups


def _identity_phase(h: PauliSum) -> float:
    return sum(t.coeff.real for t in h.terms if t.is_identity())


def _product_circuit(n: int, factors: list[tuple[float, PauliString]], phase: float = 0.0) -> Circuit:
    """Operator product ``prod_k exp(i*theta_k*P_k)`` (leftmost factor acts last)."""
    c = Circuit(n, (), phase)
    for theta, p in reversed(factors):
        c = c + exp_pauli_term(theta, p)
    return c


def compile_evolution(h: PauliSum, epsilon: float, scheme: TrotterScheme = TrotterScheme()) -> Circuit:
    """Circuit approximating ``exp(i*epsilon*h)`` under ``scheme``.

    * exact: ordered product over canonical terms; requires commuting terms.
    * first_order(n): ``(prod_g exp(i*eps*G_g/n))^n`` over the commuting groups.
      A single commuting group is instead split at the central Z rotation of
      every term (identical unitary, no extra CNOTs).
    * symmetric(n): n repetitions of the Strang splitting
      ``exp(iA eps/2n) exp(iB eps/n) exp(iA eps/2n)``.
    """
    if not h.is_hermitian():
        raise CompileError("Hamiltonian must be hermitian")
    n = h.n_qubits
    phase = epsilon * _identity_phase(h)
    terms = [t for t in h.terms if not t.is_identity()]
    if not terms:
        return Circuit(n, (), phase)
    groups = commuting_groups(h)

    if scheme.kind == "exact":
        if len(groups) > 1:
            raise SchemeError("exact factorization requires pairwise-commuting terms")
        return _product_circuit(n, [(epsilon, t) for t in terms], phase)

    steps, barriers = scheme.steps, scheme.insert_barriers
    if len(groups) == 1:
        c = Circuit(n, (), phase)
        for t in reversed(terms):
            c = c + exp_pauli_term(epsilon, t, steps=steps, insert_barriers=barriers)
        return c

    if scheme.kind == "first_order":
        one_step = [(epsilon / steps, t) for grp in groups for t in grp]
    else:
        half = [[(epsilon / (2 * steps), t) for t in grp] for grp in groups[:-1]]
        middle = [(epsilon / steps, t) for t in groups[-1]]
        one_step = [f for part in half for f in part] + middle + [f for part in reversed(half) for f in part]
    c = Circuit(n, (), phase)
    step_circuit = _product_circuit(n, one_step)
    for k in range(steps):
        if k and barriers:
            c = c.append(Barrier(range(n)))
        c = c + step_circuit
    return c


# --- state preparation and measurement ------------------------------------------


def prepare_fock(reg: BosonRegister, f: FockState) -> Circuit:
    bits = fock_to_bitstring(reg, f)
    return Circuit(reg.n_qubits, tuple(X(q) for q, b in enumerate(bits) if b == "1"))


def append_basis_rotation(c: Circuit, basis: str) -> Circuit:
    """Rotate each qubit into its measurement basis and measure it into the same-index bit."""
    if len(basis) != c.n_qubits or any(b not in "XYZ" for b in basis):
        raise CompileError(f"basis {basis!r} must be one of X/Y/Z per qubit")
    gates = list(c.gates)
    for q, b in enumerate(basis):
        if b == "X":
            gates.append(H(q))
        elif b == "Y":
            gates.extend([Sdg(q), H(q)])
    gates.extend(Measure(q) for q in range(c.n_qubits))
    return Circuit(c.n_qubits, gates, c.global_phase, max(c.n_clbits, c.n_qubits))


def mode_basis_gadget(reg: BosonRegister, mode: int, basis: str) -> list[Gate]:
    """Gates mapping the mode's X or Y eigenstates onto its Fock codewords.

    For a two-qubit mode (a, b) the X gadget is CNOT(a,b) H(a) CNOT(a,b); it
    sends (|01>+|10>)/sqrt2 to |01> and (|01>-|10>)/sqrt2 to |10>, and keeps
    span{|00>, |11>} outside the codewords. The Y gadget prepends Sdg(a).
    """
    if reg.max_excitations != 1:
        raise CompileError("mode-level bases need one excitation per mode")
    a, b = reg.mode_qubits(mode)
    if basis == "Z":
        return []
    if basis == "X":
        return [CNOT(a, b), H(a), CNOT(a, b)]
    if basis == "Y":
        return [Sdg(a), CNOT(a, b), H(a), CNOT(a, b)]
    raise CompileError(f"unknown mode basis {basis!r}")


def append_mode_basis_rotation(c: Circuit, reg: BosonRegister, basis: str) -> Circuit:
    if len(basis) != reg.n_modes:
        raise CompileError(f"basis {basis!r} must have one label per mode")
    gates = list(c.gates)
    for m, b in enumerate(basis):
        gates.extend(mode_basis_gadget(reg, m, b))
    gates.extend(Measure(q) for q in range(c.n_qubits))
    return Circuit(c.n_qubits, gates, c.global_phase, max(c.n_clbits, c.n_qubits))


# --- OpenQASM 2.0 subset ----------------------------------------------------------


def _render_angle(x: float) -> str:
    y = math.fmod(x, 4 * math.pi)
    return repr(float(y))


def to_qasm(c: Circuit) -> str:
    lines = [
        "OPENQASM 2.0;",
        'include "qelib1.inc";',
        f"// global_phase {c.global_phase!r}",
        f"qreg q[{c.n_qubits}];",
    ]
    if c.n_clbits:
        lines.append(f"creg c[{c.n_clbits}];")
    for g in c.gates:
        if g.name == "measure":
            lines.append(f"measure q[{g.qubits[0]}] -> c[{g.clbits[0]}];")
            continue
        args = ",".join(f"q[{q}]" for q in g.qubits)
        if g.params:
            ps = ",".join(_render_angle(p) for p in g.params)
            lines.append(f"{g.name}({ps}) {args};")
        else:
            lines.append(f"{g.name} {args};")
    return "\n".join(lines) + "\n"


_QASM_GATE = re.compile(r"^(\w+)(?:\(([^)]*)\))?\s+(.+);$")


def from_qasm(text: str) -> Circuit:
    """Parse the subset written by :func:`to_qasm`."""
    n = nc = 0
    phase = 0.0
    gates = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith(("OPENQASM", "include")):
            continue
        if line.startswith("// global_phase"):
            phase = float(line.split()[-1])
            continue
        if line.startswith("//"):
            continue
        if line.startswith("qreg"):
            n = int(line[line.index("[") + 1:line.index("]")])
            continue
        if line.startswith("creg"):
            nc = int(line[line.index("[") + 1:line.index("]")])
            continue
        if line.startswith("measure"):
            q, b = re.findall(r"\[(\d+)\]", line)
            gates.append(Measure(int(q), int(b)))
            continue
        m = _QASM_GATE.match(line)
        if not m:
            raise CompileError(f"cannot parse QASM line {line!r}")
        name, params, args = m.groups()
        qubits = tuple(int(x) for x in re.findall(r"\[(\d+)\]", args))
        ps = tuple(float(p) for p in params.split(",")) if params else ()
        gates.append(Gate(name, qubits, ps))
    return Circuit(n, gates, phase, nc)
