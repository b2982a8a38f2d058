import itertools

import numpy as np
import pytest

from oebi.graph import BenefitProfile, SocialNetwork, generate_benefit_profile, random_network


def all_subsets(n, max_size=None):
    max_size = n if max_size is None else max_size
    for r in range(max_size + 1):
        for c in itertools.combinations(range(n), r):
            yield frozenset(c)


def small_instance(seed, n=6, m=8, prob=(0.2, 0.9)):
    rng = np.random.default_rng(seed)
    net = random_network(n, m, rng, prob=prob, rival_prob=prob)
    return net, generate_benefit_profile(net, rng)


def make_network(n, edges, pp=1.0, pr=None):
    src = [u for u, _ in edges]
    dst = [v for _, v in edges]
    pp = np.broadcast_to(np.asarray(pp, dtype=float), (len(edges),)).copy()
    pr = pp.copy() if pr is None else np.broadcast_to(np.asarray(pr, dtype=float), (len(edges),)).copy()
    return SocialNetwork(n, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), pp, pr, None)


@pytest.fixture
def chain_counterexample():
    """0->1->2 and 3->4, all edges certain, rival seeded at 2, p = 1 and q = -2 everywhere."""
    net = make_network(5, [(0, 1), (1, 2), (3, 4)])
    return net, BenefitProfile(np.ones(5), np.full(5, -2.0)), frozenset({2})
