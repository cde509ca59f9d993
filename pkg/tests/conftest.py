import numpy as np
import pytest
from scipy.linalg import expm


def expm_oracle(h, epsilon):
    """Dense ``exp(i*epsilon*h)`` for a PauliSum."""
    return expm(1j * epsilon * h.to_matrix())


def phase_distance(a, b):
    """Max-entry distance after removing the best global phase."""
    k = np.argmax(np.abs(b))
    ph = a.flat[k] / b.flat[k]
    ph /= abs(ph)
    return float(np.abs(a - ph * b).max())


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def analytic_tomogram(body, reg=None, level="qubit", nm=None, post=False):
    """Infinite-shot tomogram of ``body`` over every X/Y/Z basis."""
    import itertools

    from bosonq.bosons import codewords
    from bosonq.circuit import append_basis_rotation, append_mode_basis_rotation
    from bosonq.measure import TomogramSet, distribution_from_array, normalize, post_select
    from bosonq.sim import exact_distribution

    sites = body.n_qubits if level == "qubit" else reg.n_modes
    bases, retained = {}, {}
    for axes in itertools.product("XYZ", repeat=sites):
        b = "".join(axes)
        if level == "qubit":
            circ = append_basis_rotation(body, b)
        else:
            circ = append_mode_basis_rotation(body, reg, b)
        probs, _ = exact_distribution(circ, nm)
        dist = distribution_from_array(probs)
        if post:
            dist, retained[b] = post_select(dist, codewords(reg))
            dist = normalize(dist)
        bases[b] = dist
    return TomogramSet(bases, level, retained)


def random_density(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def tomogram_of_rho(rho):
    """Analytic qubit-level tomogram of an explicit density matrix."""
    import itertools

    from bosonq.circuit import Circuit, append_basis_rotation, unitary_of
    from bosonq.measure import TomogramSet, distribution_from_array

    n = int(round(np.log2(rho.shape[0])))
    bases = {}
    for axes in itertools.product("XYZ", repeat=n):
        b = "".join(axes)
        u = unitary_of(append_basis_rotation(Circuit(n), b).without_measurements())
        bases[b] = distribution_from_array(np.clip(np.real(np.diag(u @ rho @ u.conj().T)), 0, None))
    return TomogramSet(bases)


ACCEPTANCE: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
