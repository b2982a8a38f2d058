import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oebi.diffusion import (Realization, exact_f, exact_sigma, monte_carlo_f, monte_carlo_samples,
                            per_realization_benefit, per_realization_benefit_ds, reachable_set,
                            sample_realization, sigma)
from oebi.errors import GraphTooLargeError
from oebi.graph import BenefitProfile, random_network

from conftest import all_subsets, make_network, small_instance


def test_certain_edges_all_live():
    net = make_network(4, [(0, 1), (1, 2), (2, 3)], pp=1.0)
    g = sample_realization(net, "positive", 0)
    assert g.live_edges == [(0, 1), (1, 2), (2, 3)]


def test_edge_inclusion_frequency():
    net = make_network(5, [(0, 1), (1, 2), (2, 3), (3, 4)], pp=0.5)
    rng = np.random.default_rng(1)
    counts = sum(sample_realization(net, "positive", rng).live.astype(int) for _ in range(100_000))
    assert np.all(np.abs(counts / 100_000 - 0.5) <= 0.01)


def test_rival_probabilities_used():
    net = make_network(2, [(0, 1)], pp=1.0, pr=1e-300)
    assert sample_realization(net, "positive", 0).live.all()
    assert not sample_realization(net, "rival", 0).live.any()


def test_empty_edge_set():
    net = make_network(3, [])
    assert sample_realization(net, "positive", 0).live_edges == []


def test_reachable_set_basics():
    net = make_network(3, [(0, 1), (1, 2)])
    g = sample_realization(net, "positive", 0)
    assert reachable_set(g, []) == set()
    assert reachable_set(g, [0]) == {0, 1, 2}
    assert reachable_set(g, [2]) == {2}


def test_two_cascade_example():
    # v1..v6 -> 0..5; positive realization reaches {v1,v2,v4,v5,v6} from v1,
    # rival realization reaches {v2,v3,v5} from v2
    edges = [(0, 1), (0, 3), (1, 4), (3, 5), (1, 2)]
    net = make_network(6, edges)
    g = Realization(net, np.array([(u, v) != (1, 2) for u, v in net_edges(net)]), "positive")
    h = Realization(net, np.array([(u, v) in {(1, 2), (1, 4)} for u, v in net_edges(net)]), "rival")
    reach_p, reach_r = reachable_set(g, [0]), reachable_set(h, [1])
    assert reach_p == {0, 1, 3, 4, 5}
    assert reach_r == {1, 2, 4}
    assert reach_p & reach_r == {1, 4}
    prof = BenefitProfile(np.array([0.9, 0.8, 0.7, 0.6, 0.5, 0.4]), np.array([0.1, -0.2, 0.3, -0.4, 0.2, 0.0]))
    expected = prof.p[0] + prof.p[3] + prof.p[5] + prof.q[1] + prof.q[4]
    assert per_realization_benefit(reach_p, reach_r, prof) == pytest.approx(expected, abs=1e-12)


def net_edges(net):
    return list(zip(net.src.tolist(), net.dst.tolist()))


def test_per_realization_benefit_degenerate_cases():
    prof = BenefitProfile(np.array([1.0, 2.0, 3.0]), np.array([0.0, -1.0, 1.0]))
    assert per_realization_benefit(set(), {0, 1}, prof) == 0
    assert per_realization_benefit({0, 2}, set(), prof) == 4.0


@settings(max_examples=1000, deadline=None)
@given(st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.sets(st.integers(0, n - 1)), st.sets(st.integers(0, n - 1)),
    st.lists(st.floats(0, 10), min_size=n, max_size=n), st.lists(st.floats(0, 20), min_size=n, max_size=n))))
def test_benefit_forms_agree(case):
    reach_p, reach_r, p, drop = case
    p = np.array(p)
    prof = BenefitProfile(p, p - np.array(drop))
    assert per_realization_benefit(reach_p, reach_r, prof) == pytest.approx(
        per_realization_benefit_ds(reach_p, reach_r, prof), abs=1e-9)


def test_exact_single_node():
    net = make_network(1, [])
    prof = BenefitProfile(np.array([1.0]), np.array([-0.3]))
    assert exact_f(net, prof, {0}, {0}).f == pytest.approx(-0.3)
    assert exact_f(net, prof, set(), {0}).f == 0.0


def test_exact_chain_half():
    net = make_network(2, [(0, 1)], pp=0.5, pr=0.9)
    val = exact_f(net, BenefitProfile.uniform(2), {0}, set())
    assert val.f == pytest.approx(1.5, abs=1e-12)
    assert exact_sigma(net, {0}) == pytest.approx(1.5, abs=1e-12)


def test_exact_without_rival_is_w():
    net, prof = small_instance(2)
    val = exact_f(net, prof, {0, 1}, set())
    assert val.z == 0
    assert val.f == pytest.approx(val.w, abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_exact_with_no_disturbance_is_w(seed):
    net, prof = small_instance(seed)
    same = BenefitProfile(prof.p, prof.p)
    for s_p in ({0}, {1, 2}, {0, 3, 5}):
        val = exact_f(net, same, s_p, {4})
        assert val.f == pytest.approx(val.w, abs=1e-12)


def test_exact_decomposition_consistent():
    net, prof = small_instance(9)
    val = exact_f(net, prof, {0, 2}, {1})
    assert val.f == pytest.approx(val.w - val.z, abs=1e-9)


def test_exact_brute_force_per_pair():
    """Cross-check the matrix form against an explicit double loop with reachable_set."""
    net, prof = small_instance(11, n=5, m=5)
    s_p, s_r = {0}, {1}
    total = 0.0
    m = net.m
    for a in range(1 << m):
        la = np.array([(a >> i) & 1 for i in range(m)], dtype=bool)
        pa = np.prod(np.where(la, net.pp, 1 - net.pp))
        ra = reachable_set(Realization(net, la), s_p)
        for b in range(1 << m):
            lb = np.array([(b >> i) & 1 for i in range(m)], dtype=bool)
            pb = np.prod(np.where(lb, net.pr, 1 - net.pr))
            total += pa * pb * per_realization_benefit(ra, reachable_set(Realization(net, lb, "rival"), s_r), prof)
    assert exact_f(net, prof, s_p, s_r).f == pytest.approx(total, abs=1e-12)


def test_exact_refuses_large_graphs():
    net = random_network(8, 13, 0)
    with pytest.raises(GraphTooLargeError):
        exact_f(net, BenefitProfile.uniform(8), {0}, set())


@pytest.mark.parametrize("seed", range(3))
def test_monte_carlo_matches_exact(seed):
    net, prof = small_instance(seed, n=7, m=10)
    s_p, s_r = {0, 1}, {2}
    draws = monte_carlo_samples(net, prof, s_p, s_r, 100_000, seed)
    se = draws.std(ddof=1) / math.sqrt(len(draws))
    assert abs(draws.mean() - exact_f(net, prof, s_p, s_r).f) <= 3 * se


def test_monte_carlo_deterministic():
    net, prof = small_instance(1)
    assert monte_carlo_f(net, prof, {0}, {1}, 1000, 5) == monte_carlo_f(net, prof, {0}, {1}, 1000, 5)


def test_monte_carlo_without_edges_is_exact():
    net = make_network(4, [])
    prof = BenefitProfile(np.array([1.0, 2.0, 3.0, 4.0]), np.array([0.5, -1.0, 0.0, 4.0]))
    # S_p \ S_r = {0, 3} earns p; S_p & S_r = {1} earns q
    assert monte_carlo_f(net, prof, {0, 1, 3}, {1, 2}, 10, 0) == 1.0 + 4.0 - 1.0


def test_sigma():
    assert sigma(make_network(3, [(0, 1)]), set(), 100, 0) == 0
    assert sigma(make_network(3, [(0, 1)]), {2}, 100, 0) == 1
    draws = monte_carlo_samples(make_network(2, [(0, 1)], pp=0.5), BenefitProfile.uniform(2), {0}, (), 100_000, 3)
    assert abs(draws.mean() - 1.5) <= 3 * draws.std(ddof=1) / math.sqrt(len(draws))


def test_non_monotone_single_node():
    net = make_network(1, [])
    prof = BenefitProfile(np.array([1.0]), np.array([-0.5]))
    assert exact_f(net, prof, {0}, {0}).f < exact_f(net, prof, set(), {0}).f


def test_not_submodular_not_supermodular(chain_counterexample):
    net, prof, s_r = chain_counterexample
    f = {s: exact_f(net, prof, s, s_r).f for s in all_subsets(5)}
    # marginal of node 1: -1 on the empty set, 0 once 0 is present
    assert f[frozenset({1})] - f[frozenset()] == pytest.approx(-1.0)
    assert f[frozenset({0, 1})] - f[frozenset({0})] == pytest.approx(0.0)
    # marginal of node 4: +1 on the empty set, 0 once 3 is present
    assert f[frozenset({4})] - f[frozenset()] == pytest.approx(1.0)
    assert f[frozenset({3, 4})] - f[frozenset({3})] == pytest.approx(0.0)
