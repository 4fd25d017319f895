import numpy as np
import pytest
from scipy.linalg import expm

from oracles import anneal_state, maxcut_parts, schrodinger
from qalimits.evolution import (EvolutionError, check_state, evolve_state, expectation_value,
                                propagate_unitary, write_state_csv)
from qalimits.graphs import InteractionGraph, generate_graph
from qalimits.hamiltonian import LocalTerm, Schedule, TimeDependentHamiltonian, build_maxcut_annealer
from qalimits.operators import X, Y, Z, embed, ghz_state, plus_state, product_state


def single_qubit(matrix, T, schedule=None):
    G = InteractionGraph(1, ((0, 0),))
    s = schedule or Schedule.constant(1.0, T)
    return TimeDependentHamiltonian(G, (LocalTerm((0, 0), matrix, s),), T)


def test_rabi_rotation():
    T = np.pi / 2
    U = propagate_unitary(single_qubit(-X, T), T)
    assert np.allclose(U.matrix, 1j * X, atol=1e-9)
    assert np.allclose(U.matrix @ [1, 0], [0, 1j], atol=1e-9)


def test_zero_time_is_identity():
    H = build_maxcut_annealer(generate_graph("path", n=3), Schedule.linear_ramp(1.0))
    U = propagate_unitary(H, 0.0)
    assert np.array_equal(U.matrix, np.eye(8)) and U.accuracy == 0
    psi = plus_state(3)
    assert np.array_equal(evolve_state(H, psi, 0.0), psi)


def test_k2_anneal_certificate():
    H = build_maxcut_annealer(generate_graph("path", n=2), Schedule.linear_ramp(1.0))
    U = propagate_unitary(H, 1.0, 1e-8)
    assert U.unitarity_defect() <= 1e-10
    assert U.accuracy <= 1e-8


def test_phase_evolution():
    t = 0.7
    psi = evolve_state(single_qubit(-Z, t), np.array([1, 1]) / np.sqrt(2), t)
    assert np.allclose(psi, np.array([np.exp(1j * t), np.exp(-1j * t)]) / np.sqrt(2), atol=1e-9)


def test_state_matches_unitary_on_c6():
    H = build_maxcut_annealer(generate_graph("cycle", n=6), Schedule.linear_ramp(0.5))
    tol = 1e-8
    psi = evolve_state(H, plus_state(6), 0.5, tol)
    U = propagate_unitary(H, 0.5, tol)
    assert np.linalg.norm(psi - U.matrix @ plus_state(6)) <= 2 * tol


def test_state_matches_adaptive_ode_oracle():
    G = generate_graph("random_regular", seed=1, n=8, degree=3)
    psi = evolve_state(build_maxcut_annealer(G, Schedule.linear_ramp(0.7)), plus_state(8), 0.7)
    assert np.linalg.norm(psi - anneal_state(8, G.edges, 0.7)) <= 1e-8


def test_sparse_state_path_matches_oracle():
    # 9 qubits exceeds the dense-step size, so this exercises expm_multiply
    G = generate_graph("cycle", n=9)
    psi = evolve_state(build_maxcut_annealer(G, Schedule.linear_ramp(0.4)), plus_state(9), 0.4)
    assert np.linalg.norm(psi - anneal_state(9, G.edges, 0.4)) <= 1e-8


def test_composition():
    G = generate_graph("cycle", n=5)
    H = build_maxcut_annealer(G, Schedule.linear_ramp(0.8))
    tol = 1e-8
    full = propagate_unitary(H, 0.8, tol).matrix
    first = propagate_unitary(H, 0.4, tol).matrix
    second = propagate_unitary(H, 0.4, tol, t0=0.4).matrix
    assert np.linalg.norm(second @ first - full, 2) <= 2 * tol


def test_time_independent_matches_expm():
    G = InteractionGraph(2, ((0, 1),))
    M = np.kron(X, Y) + 0.3 * np.kron(Z, np.eye(2))
    H = TimeDependentHamiltonian(G, (LocalTerm((0, 1), M, Schedule.constant(1.0, 1.3)),), 1.3)
    U = propagate_unitary(H, 1.3, 1e-9)
    assert np.linalg.norm(U.matrix - expm(-1.3j * M), 2) <= 1e-9


def test_complex_time_dependent_terms_match_oracle():
    G = InteractionGraph(3, ((0, 1), (1, 2), (1, 1)))
    s1 = Schedule.piecewise_linear([(0, 0.2), (0.5, 1.0), (1.0, -0.3)], 1.0)
    terms = (LocalTerm((0, 1), np.kron(X, Y), s1),
             LocalTerm((1, 2), np.kron(Y, Z), Schedule.linear_ramp(1.0)),
             LocalTerm((1, 1), Y + 0.5 * Z, Schedule.one_minus_ramp(1.0)))
    H = TimeDependentHamiltonian(G, terms, 1.0)
    psi0 = product_state([[1, 0], [0.6, 0.8j], np.array([1, 1]) / np.sqrt(2)])
    psi = evolve_state(H, psi0, 1.0, 1e-9)
    ref = schrodinger(lambda t: H.dense(t), psi0, 1.0)
    # the kink at t = 0.5 is a step boundary for the certificate's step counts
    assert np.linalg.norm(psi - ref) <= 1e-8


@pytest.mark.parametrize("method,order", [("midpoint", 2), ("cf4", 4)])
def test_convergence_order(method, order):
    from qalimits.evolution import _step_exponents, _expi_dense

    H = build_maxcut_annealer(generate_graph("path", n=3), Schedule.linear_ramp(1.0))
    ref = propagate_unitary(H, 1.0, 1e-12).matrix

    def run(n):
        U = np.eye(8, dtype=complex)
        for k in range(n):
            for w in _step_exponents(k / n, 1 / n, method):
                U = _expi_dense(H.dense_combination(w)) @ U
        return U

    e1, e2 = (np.linalg.norm(run(n) - ref, 2) for n in (8, 16))
    assert np.log2(e1 / e2) == pytest.approx(order, abs=0.3)


def test_expectation_examples():
    assert expectation_value(np.array([1, 1]) / np.sqrt(2), Z) == pytest.approx(0.0)
    G = generate_graph("cycle", n=5)
    _, C = maxcut_parts(5, G.edges)
    assert expectation_value(plus_state(5), C) == pytest.approx(-2.5)
    ZZ = sum(embed(Z, (q,), 4) for q in range(4))
    assert expectation_value(ghz_state(4), ZZ) == pytest.approx(0.0)
    assert expectation_value(ghz_state(2), [((0, 1), np.kron(Z, Z))]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        expectation_value(plus_state(1), np.array([[0, 1], [0, 0]]))


def test_limits_and_drift():
    H = build_maxcut_annealer(generate_graph("cycle", n=13), Schedule.linear_ramp(0.1))
    with pytest.raises(EvolutionError):
        propagate_unitary(H)
    with pytest.raises(EvolutionError):
        check_state(np.array([1.0, 1e-4]))
    with pytest.raises(ValueError):
        check_state(np.ones(3) / np.sqrt(3))
    with pytest.raises(EvolutionError):
        propagate_unitary(build_maxcut_annealer(generate_graph("path", n=2),
                                                Schedule.linear_ramp(1.0)), 1.0, 1e-8, max_steps=4)


def test_state_csv(tmp_path):
    path = tmp_path / "psi.csv"
    write_state_csv(plus_state(2), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,re,im" and len(lines) == 5
