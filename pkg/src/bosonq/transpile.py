"""Barrier-respecting circuit optimization and gate counting.

Levels:
    0  untouched
    1  single-qubit fusion and identity pruning
    2  level 1 + CNOT-pair cancellation (diagonal gates on the control and
       CNOTs sharing a control or target are commuted out of the way) +
       resynthesis of two-qubit blocks that admit fewer CNOTs

No rewrite moves a gate across a barrier or a measurement.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .circuit import CNOT, Circuit, Gate, apply_matrix, gate_matrix, single_qubit_gate
from .twoqubit import DecompositionError, synthesize

log = logging.getLogger(__name__)

MAX_ROUNDS = 50


@dataclass(frozen=True)
class GateCounts:
    cnot: int = 0
    single_qubit: int = 0
    barriers: int = 0
    measurements: int = 0
    depth: int = 0

    @property
    def total(self) -> int:
        return self.cnot + self.single_qubit


def gate_counts(c: Circuit) -> GateCounts:
    cnot = single = barriers = meas = 0
    level = [0] * c.n_qubits
    for g in c.gates:
        if g.name == "barrier":
            barriers += 1
            t = max((level[q] for q in g.qubits), default=0)
            for q in g.qubits:
                level[q] = t
            continue
        if g.name == "cx":
            cnot += 1
        elif g.name == "measure":
            meas += 1
        else:
            single += 1
        t = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = t
    return GateCounts(cnot, single, barriers, meas, max(level, default=0))


def _run_matrix(run: list[Gate]) -> np.ndarray:
    m = np.eye(2, dtype=complex)
    for g in run:
        m = gate_matrix(g) @ m
    return m


def fuse_single_qubit(c: Circuit) -> Circuit:
    """Merge maximal single-qubit runs into one U1 (diagonal) or U3 gate.

    A run of one gate is kept verbatim unless it is the identity up to phase.
    """
    out: list[Gate] = []
    phase = c.global_phase
    pending: dict[int, list[Gate]] = {q: [] for q in range(c.n_qubits)}

    def flush(q: int) -> None:
        nonlocal phase
        run = pending[q]
        if not run:
            return
        pending[q] = []
        g, ph = single_qubit_gate(_run_matrix(run), q, allow_u2=False)
        if g is None:
            phase += ph
        elif len(run) == 1:
            out.append(run[0])
        else:
            out.append(g)
            phase += ph

    for g in c.gates:
        if g.is_single_qubit:
            pending[g.qubits[0]].append(g)
            continue
        for q in g.qubits:
            flush(q)
        out.append(g)
    for q in range(c.n_qubits):
        flush(q)
    return replace(c, gates=tuple(out), global_phase=phase)


def _commutes_past(cx: Gate, g: Gate) -> bool:
    c, t = cx.qubits
    if not set(g.qubits) & {c, t}:
        return True
    if g.is_diagonal and g.qubits == (c,):
        return True
    if g.name == "cx":
        gc, gt = g.qubits
        if gc == c and gt not in (c, t):
            return True
        if gt == t and gc not in (c, t):
            return True
    return False


def cancel_cnot_pairs(c: Circuit) -> Circuit:
    gates = list(c.gates)
    changed = True
    while changed:
        changed = False
        for i, g in enumerate(gates):
            if g.name != "cx":
                continue
            for j in range(i + 1, len(gates)):
                h = gates[j]
                if h.name == "cx" and h.qubits == g.qubits:
                    del gates[j]
                    del gates[i]
                    changed = True
                    break
                if not _commutes_past(g, h):
                    break
            if changed:
                break
    return replace(c, gates=tuple(gates))


def _collect_block(gates: list[Gate], start: int) -> list[int]:
    """Indices of the two-qubit block that begins at the CNOT ``gates[start]``."""
    pair = set(gates[start].qubits)
    open_ = set(pair)
    idx = [start]
    for j in range(start + 1, len(gates)):
        if not open_:
            break
        g = gates[j]
        qs = set(g.qubits)
        if not qs & pair:
            continue
        if g.is_single_qubit and qs <= open_:
            idx.append(j)
        elif g.name == "cx" and qs == pair and open_ == pair:
            idx.append(j)
        else:
            open_ -= qs
    return idx


def _block_unitary(gates: list[Gate], pair: tuple[int, int]) -> np.ndarray:
    local = {pair[0]: 0, pair[1]: 1}
    u = np.eye(4, dtype=complex).reshape(2, 2, 4)
    for g in gates:
        u = apply_matrix(u, gate_matrix(g), [local[q] for q in g.qubits], 2)
    return u.reshape(4, 4)


def _emit_local(m: np.ndarray, q: int) -> tuple[list[Gate], float]:
    g, ph = single_qubit_gate(m, q, allow_u2=False)
    return ([] if g is None else [g]), ph


def resynthesize_blocks(c: Circuit, tol: float = 1e-10) -> Circuit:
    """Replace two-qubit blocks by an exact 0- or 2-CNOT equivalent when that is cheaper."""
    gates = list(c.gates)
    phase = c.global_phase
    i = 0
    while i < len(gates):
        g = gates[i]
        if g.name != "cx":
            i += 1
            continue
        idx = _collect_block(gates, i)
        block = [gates[k] for k in idx]
        n_cx = sum(1 for b in block if b.name == "cx")
        pair = tuple(sorted(g.qubits))
        try:
            syn = synthesize(_block_unitary(block, pair), tol)
        except DecompositionError as exc:
            log.debug("block at %d not resynthesized: %s", i, exc)
            syn = None
        if syn is None or syn.cnots >= n_cx:
            i += 1
            continue
        new: list[Gate] = []
        ph = syn.phase
        for m, q in zip(syn.right, pair):
            gs, p = _emit_local(m, q)
            new.extend(gs)
            ph += p
        if syn.cnots == 2:
            new.append(CNOT(*pair))
            for m, q in zip(syn.middle, pair):
                gs, p = _emit_local(m, q)
                new.extend(gs)
                ph += p
            new.append(CNOT(*pair))
            for m, q in zip(syn.left, pair):
                gs, p = _emit_local(m, q)
                new.extend(gs)
                ph += p
        drop = set(idx)
        gates = gates[:i] + new + [gg for k, gg in enumerate(gates[i:], start=i) if k not in drop]
        phase += ph
        i += max(len(new), 1)
    return replace(c, gates=tuple(gates), global_phase=phase)


def optimize(c: Circuit, level: int = 2) -> Circuit:
    if level not in (0, 1, 2):
        raise ValueError(f"optimization level must be 0, 1 or 2, got {level}")
    if level == 0:
        return c
    for _ in range(MAX_ROUNDS):
        before = c.gates
        c = fuse_single_qubit(c)
        if level >= 2:
            c = cancel_cnot_pairs(c)
            c = resynthesize_blocks(c)
            c = fuse_single_qubit(c)
        if c.gates == before:
            return c
    log.warning("optimize did not reach a fixed point in %d rounds", MAX_ROUNDS)
    return c
