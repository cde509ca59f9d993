"""One pass/fail line per acceptance criterion, printed in the terminal summary."""

import itertools
import math
import time

import numpy as np

from bosonq.bosons import BosonRegister, FockState, beam_splitter_h, codewords, single_mode_squeeze_h, two_mode_squeeze_h
from bosonq.circuit import TrotterScheme, append_basis_rotation, compile_evolution, prepare_fock, unitary_of
from bosonq.cli import ExperimentConfig, emit_csv, run_experiment
from bosonq.measure import (
    ConfusionMatrix,
    distribution_from_array,
    fidelity_bs_tomographic,
    fidelity_pure,
    fidelity_sm_tomographic,
    mitigate,
    perturbative_state_sm,
    post_select,
)
from bosonq.pauli import PauliString
from bosonq.sim import PRESETS, Counts, NoiseModel, confusion_1q, exact_distribution, execute, statevector
from bosonq.transpile import gate_counts, optimize
from conftest import analytic_tomogram, expm_oracle, random_density, record, tomogram_of_rho

SM2 = BosonRegister(1, 2)
BS = BosonRegister(2, 1)


def test_compiler_exactness():
    hams = {
        "two-photon squeeze": single_mode_squeeze_h(SM2)[0],
        "beam splitter": beam_splitter_h(BS),
        "two-mode squeeze": two_mode_squeeze_h(BS),
    }
    worst_err, worst_time = 0.0, 0.0
    for h, eps in itertools.product(hams.values(), (0.05, 0.1, math.pi / 36, math.pi / 2)):
        t0 = time.perf_counter()
        u = unitary_of(compile_evolution(h, eps))
        worst_time = max(worst_time, time.perf_counter() - t0)
        worst_err = max(worst_err, np.abs(u - expm_oracle(h, eps)).max())
    ok = worst_err <= 1e-10 and worst_time < 1.0
    assert record("compiler exactness", ok, f"max entry error {worst_err:.1e}, slowest case {worst_time:.3f} s")


def test_gate_count_reproduction():
    c = prepare_fock(SM2, FockState(0)) + compile_evolution(single_mode_squeeze_h(SM2)[0], math.sqrt(2) * 0.05)
    body = compile_evolution(single_mode_squeeze_h(SM2)[0], math.sqrt(2) * 0.05)
    raw, opt = gate_counts(body), gate_counts(optimize(c, 2))
    ok = (raw.single_qubit, raw.cnot) == (10, 4) and opt.cnot == 2
    assert record(
        "gate-count reproduction", ok,
        f"unoptimized {raw.single_qubit} single-qubit + {raw.cnot} CNOT, level 2 {opt.cnot} CNOT",
    )


def test_trotter_order():
    s2, _ = single_mode_squeeze_h(BosonRegister(1, 4))
    errs = [
        np.linalg.norm(unitary_of(compile_evolution(s2, e, TrotterScheme.symmetric())) - expm_oracle(s2, e), 2)
        for e in (0.2, 0.1, 0.05)
    ]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    slope = math.log2(errs[0] / errs[2]) / 2
    ref = expm_oracle(s2, 0.3)
    first = [
        np.linalg.norm(unitary_of(compile_evolution(s2, 0.3, TrotterScheme.first_order(n))) - ref, 2)
        for n in range(1, 11)
    ]
    monotone = all(a > b for a, b in zip(first, first[1:]))
    ok = all(4 <= r <= 16 for r in ratios) and abs(slope - 3) <= 0.3 and monotone
    assert record(
        "Trotter order", ok,
        f"halving ratios {ratios[0]:.2f}, {ratios[1]:.2f}; slope {slope:.3f}; first-order monotone in n: {monotone}",
    )


def test_noiseless_fidelity_laws():
    worst_sigma = 0.0
    for eps_hat in (0.05, 0.1, 0.2):
        (row,) = run_experiment(ExperimentConfig(epsilons=(eps_hat,), shots=8192, seed=11))
        p = math.cos(math.sqrt(2) * math.sqrt(2) * eps_hat) ** 2
        worst_sigma = max(worst_sigma, abs(row.fidelity - p) / math.sqrt(p * (1 - p) / 8192))
    worst_bs = 0.0
    for eps in (0.0, math.pi / 36, math.pi / 4, math.pi / 2):
        body = prepare_fock(BS, FockState(1, 0)) + compile_evolution(beam_splitter_h(BS), eps)
        t = analytic_tomogram(body, BS, "mode", post=True)
        worst_bs = max(worst_bs, abs(fidelity_bs_tomographic(t, eps) - 1))
    ok = worst_sigma <= 3 and worst_bs <= 1e-3
    assert record(
        "noiseless fidelity laws", ok,
        f"P0 deviation {worst_sigma:.2f} sigma; beam-splitter |F-1| {worst_bs:.1e}",
    )


def test_tomographic_fidelity_oracle():
    rng = np.random.default_rng(2024)
    e = 0.0707
    psi = perturbative_state_sm(e)
    labels = ["".join(a) for a in itertools.product("IXYZ", repeat=3)]
    mats = {l: PauliString(l).to_matrix() for l in labels}
    worst = worst_printed = 0.0
    for _ in range(100):
        rho = random_density(rng, 8)
        brute = sum(np.real(psi.conj() @ mats[l] @ psi) * np.real(np.trace(mats[l] @ rho)) for l in labels) / 8
        t = tomogram_of_rho(rho)
        worst = max(worst, abs(fidelity_sm_tomographic(t, e) - brute))
        worst_printed = max(worst_printed, abs(fidelity_sm_tomographic(t, e, printed=True) - brute))
    body = prepare_fock(SM2, FockState(0)) + compile_evolution(single_mode_squeeze_h(SM2)[0], e)
    t = analytic_tomogram(body)
    plus = fidelity_sm_tomographic(t, e)
    psi_run = statevector(body)
    rho = np.outer(psi_run, psi_run.conj())
    sign_flip = fidelity_pure(perturbative_state_sm(e, sign=-1), rho)
    ok = worst <= 1e-10
    assert record(
        "tomographic fidelity oracle", ok,
        f"max error {worst:.1e} over 100 states; printed second-order coefficients deviate by up to {worst_printed:.1e}; "
        f"noiseless run scores {plus:.6f} with the +i state and {sign_flip:.4f} with the opposite sign",
    )


def test_mitigation_round_trip():
    a = ConfusionMatrix(tuple(confusion_1q(1.4e-2, 1.4e-2) for _ in range(3)))
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(50):
        p = rng.dirichlet(np.ones(8))
        back = mitigate(distribution_from_array(a.apply(p)), a)
        worst = max(worst, 0.5 * sum(abs(back.get(format(i, "03b"), 0) - p[i]) for i in range(8)))
    nm = NoiseModel.symmetric(0, 0, 1.4e-2)
    c = append_basis_rotation(
        prepare_fock(SM2, FockState(0)) + compile_evolution(single_mode_squeeze_h(SM2)[0], 0.3), "ZZZ"
    )
    truth, _ = exact_distribution(c)
    back = mitigate(execute(c, 8192, nm, seed=3), a)
    sampled = 0.5 * sum(abs(back.get(format(i, "03b"), 0) - truth[i]) for i in range(8))
    ok = worst <= 1e-6 and sampled <= 0.02
    assert record("mitigation round-trip", ok, f"analytic TV {worst:.1e}, sampled TV {sampled:.4f}")


def test_noisy_bands():
    sm = run_experiment(ExperimentConfig(epsilons=(0.01, 0.03, 0.05), noise=PRESETS["santiago"], mitigate=True))
    sm_min = min(r.fidelity for r in sm)
    eps = (math.pi / 36, math.pi / 4, math.pi / 2)
    base = dict(kind="beam-splitter", epsilons=eps, fidelity="tomography", noise=PRESETS["casablanca"], mitigate=True)
    opt = run_experiment(ExperimentConfig(**base, opt_level=2))
    naive = run_experiment(ExperimentConfig(**base, opt_level=0))
    in_band = all(0.5 <= r.fidelity <= 1.0 for r in opt + naive)
    degrades = all(n.fidelity < o.fidelity for n, o in zip(naive, opt)) and all(
        n.cnot_count > o.cnot_count for n, o in zip(naive, opt)
    )
    ok = sm_min >= 0.9 and in_band and degrades
    fmt = lambda rows: ", ".join(f"{r.fidelity:.3f}" for r in rows)
    assert record(
        "noisy qualitative bands", ok,
        f"santiago P0 min {sm_min:.4f}; casablanca beam splitter level 2 [{fmt(opt)}] "
        f"vs {naive[0].cnot_count}-CNOT naive [{fmt(naive)}]",
    )


def test_post_selection_contract():
    rng = np.random.default_rng(9)
    subset = True
    for reg in (SM2, BS, BosonRegister(1, 4)):
        n, words = reg.n_qubits, set(codewords(reg))
        for _ in range(20):
            keys = {format(int(k), f"0{n}b") for k in rng.integers(0, 2**n, size=12)}
            counts = {k: int(rng.integers(1, 50)) for k in keys}
            kept, _ = post_select(Counts(counts, sum(counts.values())), words)
            subset &= set(kept.counts) <= words
    body = prepare_fock(SM2, FockState(0)) + compile_evolution(single_mode_squeeze_h(SM2)[0], math.sqrt(2) * 0.2)
    probs, _ = exact_distribution(append_basis_rotation(body, "ZZZ"))
    _, frac = post_select(distribution_from_array(probs), codewords(SM2))
    ok = subset and frac >= 0.999
    assert record("post-selection contract", ok, f"retained keys within codewords: {subset}; noiseless retained {frac:.6f}")


def test_determinism():
    cfg = ExperimentConfig(
        kind="beam-splitter", epsilons=(0.1, 0.7), fidelity="tomography", noise=PRESETS["casablanca"],
        shots=2048, seed=42, mitigate=True,
    )
    first, second = emit_csv(run_experiment(cfg)), emit_csv(run_experiment(cfg))
    cfg2 = ExperimentConfig(noise=PRESETS["santiago"], epsilons=(0.02, 0.05), seed=42)
    same = first == second and emit_csv(run_experiment(cfg2)) == emit_csv(run_experiment(cfg2))
    assert record("determinism", same, f"two runs byte-identical: {same} ({len(first)} bytes)")
