import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import anneal_state, hamming_boundary_brute
from qalimits.distributions import (DistributionError, OutputDistribution, concentration_report,
                                    concentration_rhs, concentration_time_limit,
                                    hamming_boundary, hamming_stats, implied_kappa1,
                                    isoperimetry_report, isoperimetry_rhs, kappa3, layers_report,
                                    output_distribution, sample_counts, write_distribution_csv,
                                    write_shells_csv)
from qalimits.graphs import generate_graph
from qalimits.operators import bitstring, ghz_state, plus_state, product_state


def random_state(rng, n):
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return psi / np.linalg.norm(psi)


def test_output_distribution_examples():
    assert np.allclose(output_distribution(plus_state(2)).probs, 0.25)
    g = output_distribution(ghz_state(5)).as_dict()
    assert g["00000"] == pytest.approx(0.5) and g["11111"] == pytest.approx(0.5)
    assert sum(v for v in g.values()) == pytest.approx(1.0)
    bell = output_distribution(ghz_state(2), 1)
    assert np.allclose(bell.probs, [0.5, 0.5])
    with pytest.raises(DistributionError):
        output_distribution(plus_state(3), 4)


def test_marginal_keeps_leading_qubits():
    psi = product_state([[1, 0], [0, 1], [1, 0]])
    p = output_distribution(psi, 2)
    assert p.as_dict() == {"00": 0.0, "01": 1.0, "10": 0.0, "11": 0.0}


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.data())
def test_marginal_consistency(n, data):
    n0 = data.draw(st.integers(0, n))
    psi = random_state(np.random.default_rng(data.draw(st.integers(0, 10**6))), n)
    direct = output_distribution(psi, n0).probs
    via_full = output_distribution(psi).marginal(n0).probs
    assert np.max(np.abs(direct - via_full)) <= 1e-10


def test_hamming_stats_examples():
    n = 6
    assert hamming_stats(output_distribution(plus_state(n)), plus_state(n)) == pytest.approx((3, 1.5, 0))
    ones = product_state([[0, 1]] * n)
    assert hamming_stats(output_distribution(ones), ones) == pytest.approx((6, 0, -6))
    with pytest.raises(DistributionError):
        hamming_stats(output_distribution(ones, 3), ones)


def test_concentration_examples():
    assert concentration_rhs(1, 0.3, 0.25, 1000) == pytest.approx(1.5 * 1000 ** -0.2, rel=1e-14)
    assert concentration_rhs(1, 0.3, 0.25, 1000) == pytest.approx(0.3768, abs=1e-4)
    psi = plus_state(8)
    rep = concentration_report(output_distribution(psi), psi, 100.0, 0.3, 0.25, 1, 3, 0.0)
    assert rep.lhs == 0 and rep.satisfied and not rep.vacuous
    with pytest.raises(DistributionError):
        concentration_rhs(1, 0.6, 0.25, 100)


def test_ghz_violates_the_tail_bound():
    n = 12
    psi = ghz_state(n)
    rep = concentration_report(output_distribution(psi), psi, n ** 0.4 / 2, 0.1, 0.1, 1, 3, 0.0)
    assert rep.lhs == pytest.approx(1.0)
    assert rep.rhs < 1 and not rep.satisfied


def test_time_limit_and_implied_kappa():
    t = concentration_time_limit(0.9, 1.0, 3, 10)
    assert t == pytest.approx(0.9 * math.log(10) / (8 * 3 ** (1.1 / 0.9) * math.log(3)))
    k = implied_kappa1(t, 1.0, 3, 10)
    assert k == pytest.approx(0.9, abs=1e-6)


def test_variance_bound_on_c6_anneal():
    G = generate_graph("cycle", n=6)
    psi = anneal_state(6, G.edges, 0.5)
    # T = 0.5 on C6 needs kappa1 > 1, outside the tail bound's domain; the variance bound still applies
    k1 = implied_kappa1(0.5, 1.0, 3, 6, hi=5.0)
    assert 1 < k1 < 5
    _, var_w, _ = hamming_stats(output_distribution(psi), psi)
    assert 4 * var_w <= 6 * 6 ** (1 + k1)


def test_boundary_examples():
    assert hamming_boundary({"000"}, 1, 3) == {"000", "001", "010", "100"}
    assert hamming_boundary({bitstring(i, 3) for i in range(8)}, 2, 3) == frozenset()
    even = {bitstring(i, 3) for i in range(8) if bin(i).count("1") % 2 == 0}
    assert len(hamming_boundary(even, 1, 3)) == 8
    assert hamming_boundary(set(), 3, 4) == frozenset()
    with pytest.raises(DistributionError):
        hamming_boundary({"0"}, 1, 21)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 4), st.data())
def test_boundary_matches_brute_force(n0, ell, data):
    F = data.draw(st.sets(st.integers(0, (1 << n0) - 1), max_size=12))
    Fs = {bitstring(i, n0) for i in F}
    assert hamming_boundary(Fs, ell, n0) == hamming_boundary_brute(Fs, ell, n0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.data())
def test_boundary_symmetric_and_monotone(n0, data):
    F = {bitstring(i, n0) for i in data.draw(st.sets(st.integers(0, (1 << n0) - 1)))}
    comp = {bitstring(i, n0) for i in range(1 << n0)} - F
    prev = frozenset()
    for ell in range(n0 + 1):
        b = hamming_boundary(F, ell, n0)
        assert b == hamming_boundary(comp, ell, n0) and prev <= b
        prev = b


def test_isoperimetry_examples():
    assert kappa3(0.5, 2) == pytest.approx(1.5 * math.log(3) - 1)
    assert isoperimetry_rhs("ii", 0.5, 0.5, 2, 16) == pytest.approx(-0.145, abs=5e-4)
    p = OutputDistribution(4, np.full(16, 1 / 16))
    rep = isoperimetry_report(p, set(), 0.0, 0.5, 2, 1, 3, 0.0, part="ii")
    assert rep.lhs == 0 and rep.rhs <= 0 and rep.satisfied and rep.vacuous


def test_isoperimetry_ball_on_uniform_cube():
    p = OutputDistribution(4, np.full(16, 1 / 16))
    ball = {bitstring(i, 4) for i in range(16) if bin(i).count("1") <= 1}
    assert p.mass(ball) == pytest.approx(5 / 16)
    rep = isoperimetry_report(p, ball, 0.0, 0.1, 0.1, 1, 3, 0.0, part="ii")
    ell = rep.params["ell"]
    assert ell == math.ceil(rep.params["ell_unrounded"])
    assert rep.lhs == pytest.approx(len(hamming_boundary(ball, ell, 4)) / 16)
    assert rep.satisfied


def test_isoperimetry_errors():
    p = OutputDistribution(3, np.full(8, 1 / 8))
    big = {bitstring(i, 3) for i in range(5)}
    with pytest.raises(DistributionError):
        isoperimetry_report(p, big, 0.0, 0.5, 0.5, 1, 3, 0.0)
    with pytest.raises(DistributionError):
        isoperimetry_report(p, {"000"}, 0.7, 0.5, 0.5, 1, 3, 0.0)
    with pytest.raises(DistributionError):
        isoperimetry_report(p, {"000"}, 0.0, 0.5, 0.5, 1, 3, 0.0, part="ii", n_total=5)
    with pytest.raises(DistributionError):
        isoperimetry_report(p, {"000"}, 0.0, 0.5, 0.5, 1, 3, 0.0, part="iii")


def test_layers_examples():
    n = 6
    p = output_distribution(ghz_state(n))
    rep = layers_report(p, {"0" * n}, {"1" * n}, 0.5, 0.5, 1, 3, 0.0)
    assert rep.lhs == n and rep.params["mu"] == pytest.approx(0.5)
    assert rep.satisfied
    zero = layers_report(output_distribution(product_state([[1, 0]] * n)), {"0" * n}, {"1" * n},
                         0.5, 0.5, 1, 3, 0.0)
    assert zero.vacuous and zero.rhs == math.inf
    with pytest.raises(DistributionError):
        layers_report(p, {"0" * n}, {"0" * n, "1" * n}, 0.5, 0.5, 1, 3, 0.0)


def test_layers_shells_on_c8_anneal():
    G = generate_graph("cycle", n=8)
    psi = anneal_state(8, G.edges, 0.3)
    p = output_distribution(psi)
    ball = lambda c: {bitstring(i, 8) for i in range(256) if bin(i ^ int(c, 2)).count("1") <= 1}
    rep = layers_report(p, ball("01010101"), ball("10101010"), 0.5, 0.5, 1, 3, 0.3, ell=1)
    shells = rep.extra["shells"]
    assert rep.lhs == 6 and [s["d"] for s in shells] == list(range(6))
    assert shells[0]["mass"] == pytest.approx(rep.params["mu"])
    assert sum(s["mass"] for s in shells) <= 1 + 1e-12
    assert rep.extra["d0"] in (1, 3)
    assert rep.satisfied


def test_sampling_is_seeded():
    p = output_distribution(plus_state(3))
    a, b = sample_counts(p, 1000, 4), sample_counts(p, 1000, 4)
    assert a == b and sum(a.values()) == 1000


def test_csv_outputs(tmp_path):
    p = output_distribution(plus_state(3))
    write_distribution_csv(p, tmp_path / "d.csv")
    rows = (tmp_path / "d.csv").read_text().splitlines()
    assert rows[0] == "bitstring,probability"
    assert sum(float(r.split(",")[1]) for r in rows[1:]) == pytest.approx(1.0, abs=1e-9)
    rep = layers_report(output_distribution(ghz_state(4)), {"0000"}, {"1111"}, 0.5, 0.5, 1, 3, 0.0, ell=1)
    write_shells_csv(rep, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "d,lower,upper,mass"
