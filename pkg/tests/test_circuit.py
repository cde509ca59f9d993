import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosonq.bosons import BosonRegister, FockState, beam_splitter_h, single_mode_squeeze_h, two_mode_squeeze_h
from bosonq.circuit import (
    CNOT,
    H,
    S,
    U1,
    U2,
    U3,
    Barrier,
    Circuit,
    CompileError,
    Measure,
    SchemeError,
    Sdg,
    TrotterScheme,
    X,
    append_basis_rotation,
    append_mode_basis_rotation,
    commuting_groups,
    compile_evolution,
    exp_pauli_term,
    from_qasm,
    gate_matrix,
    prepare_fock,
    single_qubit_gate,
    to_qasm,
    unitary_of,
    zyz_angles,
)
from bosonq.pauli import PauliString, PauliSum
from conftest import expm_oracle, phase_distance

PI = math.pi
EPSILONS = [0.05, 0.1, PI / 36, PI / 2]


def printed_two_photon_circuit(e):
    """The printed two-photon squeezing circuit, operator product read right to left."""
    ops = [
        CNOT(0, 2), U2(0, PI / 2, 0), U1(-2 * e, 0), U2(PI / 2, -PI, 0), CNOT(0, 2), U1(PI / 2, 2), U1(PI / 2, 0),
        CNOT(0, 2), U2(0, PI / 2, 0), U1(-2 * e, 0), U2(PI / 2, -PI, 0), CNOT(0, 2), U1(-PI / 2, 2), U1(-PI / 2, 0),
    ]
    return Circuit(3, ops[::-1])


def s2_two_photon():
    return single_mode_squeeze_h(BosonRegister(1, 2))[0]


class TestGates:
    def test_cnot_matrix(self):
        np.testing.assert_array_equal(unitary_of(Circuit(2, [CNOT(0, 1)])), gate_matrix(CNOT(0, 1)))
        assert gate_matrix(CNOT(0, 1))[3, 2] == 1

    def test_s_is_u1_half_pi(self):
        np.testing.assert_allclose(gate_matrix(S(0)), gate_matrix(U1(PI / 2, 0)), atol=1e-12)

    def test_u2_is_u3_half_pi(self):
        np.testing.assert_allclose(gate_matrix(U2(0.3, -0.7, 0)), gate_matrix(U3(PI / 2, 0.3, -0.7, 0)), atol=1e-12)

    def test_gate_identities(self):
        x = np.array([[0, 1], [1, 0]])
        z = np.diag([1, -1])
        rx = (np.eye(2) + 1j * x) / math.sqrt(2)
        rz = (np.eye(2) + 1j * z) / math.sqrt(2)
        np.testing.assert_allclose(rx @ rz, np.exp(1j * PI / 4) * gate_matrix(U2(PI / 2, -PI, 0)), atol=1e-12)
        th = 0.37
        ez = np.diag([np.exp(1j * th), np.exp(-1j * th)])
        np.testing.assert_allclose(ez, np.exp(1j * th) * gate_matrix(U1(-2 * th, 0)), atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, PI), st.floats(-PI, PI), st.floats(-PI, PI), st.floats(-PI, PI))
    def test_zyz_roundtrip(self, th, phi, lam, ph):
        m = np.exp(1j * ph) * gate_matrix(U3(th, phi, lam, 0))
        t, p, l, g = zyz_angles(m)
        np.testing.assert_allclose(np.exp(1j * g) * gate_matrix(U3(t, p, l, 0)), m, atol=1e-10)

    def test_single_qubit_gate_choices(self):
        assert single_qubit_gate(np.eye(2) * 1j, 0)[0] is None
        assert single_qubit_gate(gate_matrix(S(0)), 0)[0].name == "u1"
        assert single_qubit_gate(gate_matrix(H(0)), 0)[0].name == "u2"
        assert single_qubit_gate(gate_matrix(U3(0.3, 0.1, 0.2, 0)), 0)[0].name == "u3"


class TestExpPauliTerm:
    def test_xx_block(self):
        p = PauliString("XIX")
        c = exp_pauli_term(0.05, p)
        assert sum(g.name == "cx" for g in c.gates) == 2
        np.testing.assert_allclose(unitary_of(c), expm_oracle(PauliSum([p]), 0.05), atol=1e-12)

    def test_weight_four_ladder(self):
        p = PauliString("XXXX")
        c = exp_pauli_term(PI / 16, p)
        assert sum(g.name == "cx" for g in c.gates) == 6
        np.testing.assert_allclose(unitary_of(c), expm_oracle(PauliSum([p]), PI / 16), atol=1e-12)

    def test_zero_angle_is_identity(self):
        c = exp_pauli_term(0.0, PauliString("XYZY"))
        assert phase_distance(unitary_of(c), np.eye(16)) < 1e-12

    def test_identity_rejected(self):
        with pytest.raises(CompileError):
            exp_pauli_term(0.1, PauliString("II"))

    def test_palindromic(self):
        c = exp_pauli_term(0.3, PauliString("YXZY"))
        centre = [i for i, g in enumerate(c.gates) if g.name == "u1" and g.qubits == (0,) and abs(g.params[0] + 0.6) < 1e-12]
        (k,) = centre
        before, after = c.gates[:k], c.gates[k + 1:]
        assert len(before) == len(after)
        for g, h in zip(before, reversed(after)):
            m = gate_matrix(g) @ gate_matrix(h) if g.qubits == h.qubits else None
            assert m is not None
            assert phase_distance(m, np.eye(len(m))) < 1e-12

    @settings(max_examples=150, deadline=None)
    @given(
        st.text(alphabet="IXYZ", min_size=1, max_size=5).filter(lambda s: set(s) != {"I"}),
        st.floats(-3, 3),
        st.floats(-2, 2).filter(lambda c: abs(c) > 1e-3),
        st.integers(1, 3),
    )
    def test_matches_oracle(self, axes, theta, coeff, steps):
        p = PauliString(axes, coeff)
        c = exp_pauli_term(theta, p, steps=steps, insert_barriers=True)
        assert sum(g.name == "cx" for g in c.gates) == 2 * (p.weight - 1)
        np.testing.assert_allclose(unitary_of(c), expm_oracle(PauliSum([p]), theta), atol=1e-10)


class TestCompileEvolution:
    @pytest.mark.parametrize("eps", EPSILONS)
    @pytest.mark.parametrize(
        "build",
        [s2_two_photon, lambda: beam_splitter_h(BosonRegister(2, 1)), lambda: two_mode_squeeze_h(BosonRegister(2, 1))],
    )
    def test_exact_matches_oracle(self, build, eps):
        h = build()
        np.testing.assert_allclose(unitary_of(compile_evolution(h, eps)), expm_oracle(h, eps), atol=1e-10)

    def test_two_photon_structure(self):
        c = compile_evolution(s2_two_photon(), 0.05 * math.sqrt(2))
        assert len(c.gates) == 14
        assert sum(g.name == "cx" for g in c.gates) == 4
        assert all(g.qubits == (0, 2) for g in c.gates if g.name == "cx")

    @pytest.mark.parametrize("e", [0.05, 0.2])
    def test_equals_printed_circuit(self, e):
        c = compile_evolution(s2_two_photon(), e * math.sqrt(2))
        assert phase_distance(unitary_of(c), unitary_of(printed_two_photon_circuit(e))) < 1e-12

    def test_beam_splitter_swaps_excitation(self):
        reg = BosonRegister(2, 1)
        c = prepare_fock(reg, FockState(1, 0)) + compile_evolution(beam_splitter_h(reg), PI / 2)
        psi = unitary_of(c)[:, 0]
        assert abs(psi[0b0110] - 1j) < 1e-10

    def test_exact_rejects_noncommuting(self):
        s2, _ = single_mode_squeeze_h(BosonRegister(1, 4))
        with pytest.raises(SchemeError):
            compile_evolution(s2, 0.1)

    def test_grouping(self):
        s2, _ = single_mode_squeeze_h(BosonRegister(1, 4))
        groups = commuting_groups(s2)
        assert [sorted({t.support for t in g}) for g in groups] == [[(0, 2), (1, 3)], [(2, 4)]]

    def test_symmetric_third_order(self):
        s2, _ = single_mode_squeeze_h(BosonRegister(1, 4))
        errs = [
            np.linalg.norm(unitary_of(compile_evolution(s2, e, TrotterScheme.symmetric())) - expm_oracle(s2, e), 2)
            for e in (0.2, 0.1, 0.05)
        ]
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        assert all(4 <= r <= 16 for r in ratios)
        assert abs(math.log2(errs[0] / errs[2]) / 2 - 3) < 0.3

    @pytest.mark.parametrize("eps", [0.05, 0.15, 0.3])
    def test_first_order_monotone_in_steps(self, eps):
        s2, _ = single_mode_squeeze_h(BosonRegister(1, 4))
        ref = expm_oracle(s2, eps)
        errs = [
            np.linalg.norm(unitary_of(compile_evolution(s2, eps, TrotterScheme.first_order(n))) - ref, 2)
            for n in range(1, 7)
        ]
        assert all(a > b for a, b in zip(errs, errs[1:]))

    def test_barriers_between_steps(self):
        s2, _ = single_mode_squeeze_h(BosonRegister(1, 4))
        c = compile_evolution(s2, 0.2, TrotterScheme.first_order(3, insert_barriers=True))
        assert sum(g.name == "barrier" for g in c.gates) == 2

    def test_identity_term_goes_to_phase(self):
        h = PauliSum([PauliString("II", 0.5), PauliString("XX", 1.0)])
        np.testing.assert_allclose(unitary_of(compile_evolution(h, 0.3)), expm_oracle(h, 0.3), atol=1e-12)


class TestPreparationAndMeasurement:
    def test_prepare_ground(self):
        c = prepare_fock(BosonRegister(1, 2), FockState(0))
        assert [g.qubits for g in c.gates] == [(1,), (2,)]

    def test_prepare_two_mode(self):
        reg = BosonRegister(2, 1)
        assert [g.qubits[0] for g in prepare_fock(reg, FockState(1, 0)).gates] == [0, 3]
        assert [g.qubits[0] for g in prepare_fock(reg, FockState(0, 0)).gates] == [1, 3]

    def test_basis_rotation(self):
        c = append_basis_rotation(Circuit(3), "XZY")
        assert [(g.name, g.qubits) for g in c.gates] == [
            ("h", (0,)), ("sdg", (2,)), ("h", (2,)), ("measure", (0,)), ("measure", (1,)), ("measure", (2,))
        ]
        assert len(append_basis_rotation(Circuit(3), "ZZZ").gates) == 3

    @pytest.mark.parametrize("basis, vec_plus", [
        ("X", np.array([0, 1, 1, 0]) / math.sqrt(2)),
        ("Y", np.array([0, 1, 1j, 0]) / math.sqrt(2)),
    ])
    def test_mode_gadget_maps_eigenstates(self, basis, vec_plus):
        reg = BosonRegister(1, 1)
        u = unitary_of(append_mode_basis_rotation(Circuit(2), reg, basis).without_measurements())
        vec_minus = vec_plus.copy()
        vec_minus[2] *= -1
        # +1 eigenstate lands on codeword "01" (Fock 0), -1 on "10" (Fock 1)
        assert abs(abs((u @ vec_plus)[0b01]) - 1) < 1e-12
        assert abs(abs((u @ vec_minus)[0b10]) - 1) < 1e-12

    def test_unitary_rejects_measure(self):
        with pytest.raises(CompileError):
            unitary_of(Circuit(1, [Measure(0)], n_clbits=1))


class TestQasm:
    def test_roundtrip(self):
        c = compile_evolution(beam_splitter_h(BosonRegister(2, 1)), 0.3)
        c = append_basis_rotation(c.append(Barrier(range(4))), "XYZZ")
        back = from_qasm(to_qasm(c))
        assert [g.name for g in back.gates] == [g.name for g in c.gates]
        np.testing.assert_allclose(
            unitary_of(back.without_measurements()), unitary_of(c.without_measurements()), atol=1e-12
        )

    def test_header(self):
        text = to_qasm(Circuit(2, [X(0), Sdg(1)], 0.25))
        assert text.startswith("OPENQASM 2.0;")
        assert "// global_phase 0.25" in text

    def test_empty_circuit_is_identity(self):
        np.testing.assert_array_equal(unitary_of(Circuit(2)), np.eye(4))


def test_zyz_near_identity_with_rounding_noise():
    m = np.array([[1 + 3e-14j, -3.1e-14], [3.1e-14 - 7e-17j, 1 + 3.1e-14j]])
    m /= np.sqrt(abs(np.linalg.det(m)))
    g, ph = single_qubit_gate(m, 0)
    r = np.eye(2) if g is None else gate_matrix(g)
    assert np.abs(np.exp(1j * ph) * r - m).max() < 1e-12
