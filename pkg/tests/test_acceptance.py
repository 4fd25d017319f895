"""Acceptance checks, one per criterion; each prints a single PASS/FAIL line."""

import math
import time

import numpy as np

from oracles import eig_function, fd_derivative, hamming_boundary_brute
from qalimits.distributions import (concentration_report, concentration_rhs,
                                    concentration_time_limit, hamming_boundary, output_distribution)
from qalimits.evolution import propagate_unitary
from qalimits.graphs import generate_graph
from qalimits.hamiltonian import Schedule, build_maxcut_annealer
from qalimits.locality import local_edge_expectation, lr_bound_rhs, lr_report
from qalimits.maxcut import (GW_RATIO, brute_force_maxcut, edge_lr_error, qa_expected_cut,
                             ramanujan_rhs, tree_bracket, tree_local_expected_cut,
                             z2_commutator_defect)
from qalimits.operators import Z, bitstring, ghz_state
from qalimits.polymatrix import (ScalarFunction, build_smoothing_operator, chebyshev_T,
                                 divided_difference_matrix, gamma2_estimate,
                                 matrix_function_derivative)

PLUS = np.array([1.0, 1.0]) / np.sqrt(2)


def verdict(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def test_c1_light_cone_on_c8():
    t0 = time.perf_counter()
    H = build_maxcut_annealer(generate_graph("cycle", n=8), Schedule.linear_ramp(0.5))
    U = propagate_unitary(H, 0.5, 1e-8)
    reps = {L: lr_report(H, {0}, Z, L, 0.5, 1e-8, U=U) for L in range(2, 7)}
    elapsed = time.perf_counter() - t0
    bounded = all(r.lhs <= r.rhs + 1e-6 for r in reps.values())
    shrinks = reps[5].lhs < reps[2].lhs
    ok = bounded and shrinks and elapsed < 60
    lhs = ", ".join(f"L={L}: {r.lhs:.3e} <= {r.rhs:.3e}" for L, r in reps.items())
    verdict("C1 light-cone bound", ok, f"{lhs}; {elapsed:.1f} s")


def test_c2_golden_values():
    lr = lr_bound_rhs(1, 1, 4, 0.5, 1, 2)
    ram, below = ramanujan_rhs(0.499, 0.001, 6)
    conc = concentration_rhs(1, 0.3, 0.25, 1000)
    ok = (abs(lr - 0.0249) <= 1e-4 and abs(ram - 0.8731) <= 1e-4 and below and ram < GW_RATIO
          and abs(conc - 0.3768) <= 1e-4)
    verdict("C2 golden values", ok, f"lr={lr:.6f} ramanujan={ram:.6f} concentration={conc:.6f}")


def test_c3_derivative_vs_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    funcs = [ScalarFunction.power(2), ScalarFunction.chebyshev(3), ScalarFunction.chebyshev(5),
             ScalarFunction.smoothing(3, 1 / 3)]
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 17))
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        w, V = np.linalg.eigh(G + G.conj().T)
        w = -1 + 2.5 * (w - w.min()) / (w.max() - w.min())
        A = (V * w) @ V.conj().T
        E = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        E = E + E.conj().T
        E /= np.linalg.norm(E, 2)
        for f in funcs:
            fd = fd_derivative(lambda B: eig_function(B, f), A, E)
            got = matrix_function_derivative(A, E, f)
            worst = max(worst, np.linalg.norm(got - fd) / np.linalg.norm(fd))
    elapsed = time.perf_counter() - t0
    verdict("C3 Daleckii-Krein derivative", worst <= 1e-6 and elapsed < 30,
            f"worst relative error {worst:.2e} over 200 cases; {elapsed:.1f} s")


def test_c4_gamma2_certificates():
    rng = np.random.default_rng(7)
    d = 8
    worst_cheb = -math.inf
    bracket_ok = True
    for n in range(1, 7):
        for delta in (0.0, 0.5, 1.0):
            bound = (2 * n * n - 1) * chebyshev_T(n, 1 + delta)
            for _ in range(20):
                lam = rng.uniform(-1, 1 + delta, d)
                est = gamma2_estimate(divided_difference_matrix(ScalarFunction.chebyshev(n), lam).entries,
                                      (n, delta))
                bracket_ok &= est.lower <= est.upper
                worst_cheb = max(worst_cheb, est.upper - bound)
    worst_smooth = -math.inf
    for n in range(1, 7):
        for eps in (1 / 3, 0.1):
            for _ in range(10):
                lam = rng.uniform(0, 1, d)
                est = gamma2_estimate(divided_difference_matrix(ScalarFunction.smoothing(n, eps), lam).entries,
                                      (n,))
                bracket_ok &= est.lower <= est.upper
                worst_smooth = max(worst_smooth, est.upper - (6 * n * n - 3))
    J = gamma2_estimate(np.ones((d, d)))
    ok = bracket_ok and worst_cheb <= 1e-6 and worst_smooth <= 1e-6 and J.upper == 1 and J.lower == 1
    verdict("C4 gamma_2 certificates", ok,
            f"max(upper - (2n^2-1)T_n(1+delta)) = {worst_cheb:.3g}, max(upper - (6n^2-3)) = "
            f"{worst_smooth:.3g}, gamma_2(J) in [{J.lower!r}, {J.upper!r}]")


def test_c5_operator_sandwich():
    t0 = time.perf_counter()
    worst = math.inf
    for n1 in (4, 6, 8):
        for T in (0.0, 0.3, 0.6):
            H = build_maxcut_annealer(generate_graph("cycle", n=n1), Schedule.linear_ramp(T))
            U = propagate_unitary(H, T, 1e-8)
            for theta in (0.0, 0.25):
                b = build_smoothing_operator([PLUS] * n1, n1, theta, U, strict=False)
                worst = min(worst, b.min_eig_lower, b.min_eig_upper)
    elapsed = time.perf_counter() - t0
    verdict("C5 operator sandwich", worst >= -1e-9 and elapsed < 120,
            f"smallest eigenvalue over 18 cases {worst:.3e}; {elapsed:.1f} s")


def test_c6_concentration():
    T, k1, k2, c = 0.03, 0.9, 0.46, 1.5
    lines, ok = [], True
    for G in (generate_graph("cycle", n=10), generate_graph("random_regular", seed=3, n=10, degree=3)):
        H = build_maxcut_annealer(G, Schedule.linear_ramp(T))
        delta, g = H.max_degree, H.coupling_bound
        run = qa_expected_cut(G, T=T)
        rep = concentration_report(run.distribution, run.psi_T, c, k1, k2, g, delta, T)
        premise = T <= concentration_time_limit(k1, g, delta, 10)
        ok &= premise and rep.extra["var_ok"] and (rep.satisfied or rep.vacuous)
        lines.append(f"Delta_eff={delta} var={rep.extra['var_zeta']:.3f}<= {rep.extra['var_zeta_bound']:.1f}, "
                     f"tail {rep.lhs:.2e} vs {rep.rhs:.3f}{' (vacuous)' if rep.vacuous else ''}")
    n = 12
    psi = ghz_state(n)
    ghz = concentration_report(output_distribution(psi), psi, n ** 0.4 / 2, 0.1, 0.1, 1, 3, 0.0)
    ghz_violates = ghz.lhs > ghz.rhs and ghz.rhs < 1
    ok &= ghz_violates
    lines.append(f"GHZ_{n} tail {ghz.lhs:.3f} > {ghz.rhs:.3f}")
    verdict("C6 concentration", ok, "; ".join(lines))


def test_c7_flip_symmetry():
    cases = [(generate_graph("path", n=2), (0.0, 1.0, 20.0)),
             (generate_graph("cycle", n=6), (0.0, 0.5)),
             (generate_graph("cycle", n=10), (0.03, 0.6)),
             (generate_graph("complete_bipartite", a=3, b=3), (0.4,)),
             (generate_graph("random_regular", seed=3, n=10, degree=3), (0.03, 0.5)),
             (generate_graph("random_regular_bipartite", seed=1, n=12, degree=3), (0.3,))]
    worst_p = worst_c = 0.0
    runs = 0
    for G, Ts in cases:
        for T in Ts:
            run = qa_expected_cut(G, T=T)
            worst_p = max(worst_p, run.flip_defect)
            if T > 0:
                worst_c = max(worst_c, z2_commutator_defect(G, Schedule.linear_ramp(T), 32))
            runs += 1
    verdict("C7 flip symmetry", worst_p <= 1e-10 and worst_c <= 1e-10,
            f"{runs} runs: max |p(x) - p(x_bar)| = {worst_p:.1e}, max commutator = {worst_c:.1e}")


def test_c8_tree_locality():
    T, L, tol = 0.3, 2, 1e-8
    P = build_maxcut_annealer(generate_graph("path", n=13), Schedule.linear_ramp(T))
    C12 = generate_graph("cycle", n=12)
    C = build_maxcut_annealer(C12, Schedule.linear_ramp(T))
    e_tree = local_edge_expectation(P, (6, 7), L, T, tol)
    gap = max(abs(local_edge_expectation(C, e, L, T, tol) - e_tree) for e in C12.edges)
    assembled = tree_local_expected_cut(C12, None, T, L, tol)
    full = qa_expected_cut(C12, T=T, tol=tol).expected_cut
    lo, hi = tree_bracket(e_tree, 12, assembled["r_l_count"], edge_lr_error(L, T, 2))
    ok = gap <= 1e-6 and lo <= full <= hi
    verdict("C8 tree locality", ok,
            f"E_tree={e_tree:.10f}, max edge gap {gap:.1e}; full {full:.8f} in [{lo:.3f}, {hi:.3f}], "
            f"tree-local {assembled['expected_cut']:.8f}")


def test_c9_oracle_equivalences():
    rng = np.random.default_rng(99)
    mismatches = 0
    for _ in range(200):
        n0 = int(rng.integers(1, 11))
        ell = int(rng.integers(0, n0 + 1))
        k = int(rng.integers(0, min(1 << n0, 40) + 1))
        F = {bitstring(int(i), n0) for i in rng.choice(1 << n0, size=k, replace=False)}
        mismatches += hamming_boundary(F, ell, n0) != hamming_boundary_brute(F, ell, n0)
    bipartite = [generate_graph("path", n=2), generate_graph("path", n=7), generate_graph("cycle", n=6),
                 generate_graph("cycle", n=8), generate_graph("complete_bipartite", a=3, b=3),
                 generate_graph("complete_bipartite", a=2, b=5)]
    bipartite += [generate_graph("random_regular_bipartite", seed=s, n=12, degree=3) for s in range(3)]
    cut_ok = all(brute_force_maxcut(G)[0] == len(G.proper_edges) for G in bipartite)
    worst = 0.0
    for G in bipartite[:6] + [generate_graph("cycle", n=5), generate_graph("random_regular", seed=4, n=10, degree=3)]:
        for T in (0.0, 0.4, 1.0):
            run = qa_expected_cut(G, T=T)
            worst = max(worst, abs(run.expected_cut - run.expected_cut_operator))
    ok = mismatches == 0 and cut_ok and worst <= 1e-8
    verdict("C9 oracle equivalences", ok,
            f"{mismatches}/200 boundary mismatches; bipartite Cut* = |E| on {len(bipartite)} graphs: "
            f"{cut_ok}; operator vs distribution max gap {worst:.1e}")


def test_c10_baselines():
    graphs = [generate_graph("path", n=2), generate_graph("cycle", n=5), generate_graph("cycle", n=8),
              generate_graph("complete_bipartite", a=3, b=3),
              generate_graph("random_regular", seed=2, n=10, degree=3)]
    worst = max(abs(qa_expected_cut(G, T=0.0).expected_cut - len(G.proper_edges) / 2) for G in graphs)
    k2 = qa_expected_cut(generate_graph("path", n=2), T=20.0).expected_cut
    verdict("C10 baselines", worst <= 1e-8 and k2 >= 0.95,
            f"T=0 max deviation from |E|/2 = {worst:.1e} on 5 graphs; K2 at T=20: {k2:.6f}")
