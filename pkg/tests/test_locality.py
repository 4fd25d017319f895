import math

import numpy as np
import pytest

from qalimits.evolution import propagate_unitary
from qalimits.graphs import generate_graph
from qalimits.hamiltonian import Schedule, build_maxcut_annealer
from qalimits.locality import (LocalityError, local_edge_expectation, lr_bound_rhs,
                               lr_discrepancy, lr_report)
from qalimits.maxcut import qa_expected_cut
from qalimits.operators import Z

# Operator-norm discrepancies on the C8 annealer, A = {0}, O = Z_0, T = 0.5,
# from an adaptive-RK integration of the full and restricted unitaries (rtol 1e-12).
C8_DISCREPANCY = {2: 4.612571998638753e-07, 3: 5.735661678141058e-10}
# Cut expectation of the middle edge of a 6-vertex path, T = 0.3, same oracle.
E_TREE_L2_T03 = 0.5073806940291699


@pytest.fixture(scope="module")
def c8():
    H = build_maxcut_annealer(generate_graph("cycle", n=8), Schedule.linear_ramp(0.5))
    return H, propagate_unitary(H, 0.5, 1e-8)


def test_bound_rhs_examples():
    assert lr_bound_rhs(1, 1, 4, 0.5, 1, 2) == pytest.approx(0.0249, abs=1e-4)
    assert lr_bound_rhs(1, 1, 4, 0.5, 1, 2) == pytest.approx(
        math.sqrt(2 / math.pi) * math.exp(-4 * math.log(2) - 0.5 * math.log(4)), rel=1e-14)
    assert lr_bound_rhs(1, 0, 4, 0.5, 1, 2) == 0
    assert lr_bound_rhs(2, 1, 5, 0.3, 1, 3) == pytest.approx(2 * lr_bound_rhs(1, 1, 5, 0.3, 1, 3))


@pytest.mark.parametrize("args", [(1, 1, 1, 0.5, 1, 2), (1, 1, 3, 0, 1, 2), (1, 1, 3, 0.5, 1, 1),
                                  (1, 1, 3, 0.5, 0, 2)])
def test_bound_domain_errors(args):
    with pytest.raises(LocalityError):
        lr_bound_rhs(*args)


def test_trivial_discrepancies(c8):
    H, U = c8
    assert lr_discrepancy(H, range(8), Z, 2, U=U, observable_qubits=(0,)) == 0
    assert lr_discrepancy(H, {0}, Z, 2, T=0.0) == 0


def test_support_must_lie_in_a(c8):
    H, U = c8
    with pytest.raises(LocalityError):
        lr_discrepancy(H, {0}, Z, 2, U=U, observable_qubits=(1,))


def test_c8_discrepancy_matches_oracle(c8):
    H, U = c8
    for L, ref in C8_DISCREPANCY.items():
        got = lr_discrepancy(H, {0}, Z, L, U=U)
        assert got == pytest.approx(ref, abs=1e-11)
        assert got > 0


def test_c8_reports_satisfied_and_non_increasing(c8):
    H, U = c8
    reps = [lr_report(H, {0}, Z, L, U=U) for L in range(2, 7)]
    assert all(r.satisfied for r in reps)
    assert all(r.lhs <= 2 for r in reps)
    lhs = [r.lhs for r in reps]
    assert all(b <= a + 1e-9 for a, b in zip(lhs, lhs[1:]))
    assert lhs[-1] == 0  # the L = 6 region covers the cycle
    assert reps[0].vacuous and not reps[-1].vacuous
    assert reps[0].params["Delta"] == 3 and reps[0].params["g"] == pytest.approx(1.0)


def test_edge_expectation_at_zero_time():
    H = build_maxcut_annealer(generate_graph("cycle", n=12), Schedule.linear_ramp(0.3))
    assert local_edge_expectation(H, (0, 1), 2, T=0.0) == pytest.approx(0.5, abs=1e-14)


def test_edge_expectation_tree_equivalence():
    tol = 1e-8
    P = build_maxcut_annealer(generate_graph("path", n=13), Schedule.linear_ramp(0.3))
    C = build_maxcut_annealer(generate_graph("cycle", n=12), Schedule.linear_ramp(0.3))
    ref = local_edge_expectation(P, (6, 7), 2, 0.3, tol)
    assert ref == pytest.approx(E_TREE_L2_T03, abs=1e-9)
    for e in [(0, 1), (5, 6), (0, 11)]:
        assert local_edge_expectation(C, e, 2, 0.3, tol) == pytest.approx(ref, abs=2 * tol)


def test_edge_expectation_covering_ball_matches_full_run():
    G = generate_graph("cycle", n=7)
    H = build_maxcut_annealer(G, Schedule.linear_ramp(0.6))
    run = qa_expected_cut(G, T=0.6)
    total = sum(local_edge_expectation(H, e, 3) for e in G.proper_edges)
    assert total == pytest.approx(run.expected_cut, abs=1e-8)


def test_edge_expectation_register_limit():
    H = build_maxcut_annealer(generate_graph("cycle", n=16), Schedule.linear_ramp(0.3))
    with pytest.raises(LocalityError):
        local_edge_expectation(H, (0, 1), 7, max_qubits=14)
    with pytest.raises(LocalityError):
        local_edge_expectation(H, (0, 0), 2)


def test_report_serialises():
    H = build_maxcut_annealer(generate_graph("path", n=4), Schedule.linear_ramp(0.2))
    d = lr_report(H, {0}, np.diag([1.0, -1.0]), 2).to_dict()
    assert d["conventions"]["log"] == "natural"
    assert set(d) >= {"lhs", "rhs", "params", "satisfied", "vacuous"}
