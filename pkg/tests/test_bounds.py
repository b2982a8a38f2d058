import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oebi.bounds import (PermutationOrder, build_permutation, modular_lower, modular_lower_naive,
                         modular_upper_1, modular_upper_2)
from oebi.errors import ValidationError
from oebi.ris import CoverageOracle, sample_collection

from conftest import all_subsets, small_instance


def random_oracle(seed, n=5, sets=12, max_size=3):
    rng = np.random.default_rng(seed)
    members = [sorted(rng.choice(n, size=rng.integers(1, max_size + 1), replace=False).tolist())
               for _ in range(sets)]
    ptr = np.concatenate([[0], np.cumsum([len(s) for s in members])])
    weights = rng.choice([0.0, 0.5, 1.0, 2.0], size=sets)
    return CoverageOracle(n, ptr, np.array([x for s in members for x in s]), weights)


def modular_oracle(weights):
    n = len(weights)
    return CoverageOracle(n, np.arange(n + 1), np.arange(n), np.asarray(weights, dtype=float))


def marginal(b, j, base):
    return b(base | {j}) - b(base)


@pytest.mark.parametrize("upper", [modular_upper_1, modular_upper_2])
def test_upper_exact_for_modular(upper):
    b = modular_oracle([0.5, 1.0, 0.0, 2.0])
    bound = upper(b, {1, 3})
    for y in all_subsets(4):
        assert bound(y) == pytest.approx(b(y), abs=1e-12)


def test_lower_exact_for_modular():
    b = modular_oracle([0.5, 1.0, 0.0, 2.0])
    alpha = build_permutation("alpha1", {2}, 4, rng=0)
    bound = modular_lower(b, {2}, alpha)
    for y in all_subsets(4):
        assert bound(y) == pytest.approx(b(y), abs=1e-12)


def test_upper_at_empty_is_singleton_sum():
    b = random_oracle(1)
    for upper in (modular_upper_1, modular_upper_2):
        bound = upper(b, set())
        for y in all_subsets(b.n):
            assert bound(y) == pytest.approx(sum(b({j}) for j in y), abs=1e-12)


def test_upper_units_match_definitions():
    b = random_oracle(2, n=6, sets=20)
    x = frozenset({0, 2, 5})
    v = frozenset(range(b.n))
    u1, u2 = modular_upper_1(b, x), modular_upper_2(b, x)
    for j in range(b.n):
        if j in x:
            assert u1.unit_value[j] == pytest.approx(marginal(b, j, x - {j}))
            assert u2.unit_value[j] == pytest.approx(marginal(b, j, v - {j}))
        else:
            assert u1.unit_value[j] == pytest.approx(marginal(b, j, frozenset()))
            assert u2.unit_value[j] == pytest.approx(marginal(b, j, x))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sets(st.integers(0, 5)), st.integers(0, 10_000))
def test_sandwich_exhaustive(seed, x, perm_seed):
    b = random_oracle(seed, n=6, sets=15, max_size=4)
    alpha = build_permutation("alpha1", x, 6, rng=perm_seed)
    lo, up1, up2 = modular_lower(b, x, alpha), modular_upper_1(b, x), modular_upper_2(b, x)
    for y in all_subsets(6):
        assert lo(y) <= b(y) + 1e-9
        assert up1(y) >= b(y) - 1e-9
        assert up2(y) >= b(y) - 1e-9
    for bound in (lo, up1, up2):
        assert abs(bound(x) - b(x)) <= 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_prefix_fast_path_matches_naive(seed):
    net, prof = small_instance(seed)
    coll = sample_collection(net, prof, 300, 300, seed, seed + 1)
    rng = np.random.default_rng(seed)
    x = frozenset(np.flatnonzero(rng.random(net.n) < 0.5).tolist())
    alpha = build_permutation("alpha1", x, net.n, rng=rng)
    for oracle in (coll.w_oracle(), coll.z_oracle({0})):
        fast = modular_lower(oracle, x, alpha)
        slow = modular_lower_naive(oracle, net.n, alpha)
        np.testing.assert_allclose(fast.unit_value, slow.unit_value, atol=1e-12)
        # prefixes are tight
        for i in range(net.n + 1):
            prefix = alpha.order[:i].tolist()
            assert fast(prefix) == pytest.approx(oracle(prefix), abs=1e-9)


def test_lower_rejects_wrong_prefix():
    b = random_oracle(0)
    alpha = build_permutation("alpha1", {0, 1}, b.n, rng=0)
    with pytest.raises(ValidationError):
        modular_lower(b, {0, 2}, alpha)


def test_alpha2_descending_scores():
    scores = {"f": np.array([0.3, 0.9, -0.1, 0.5]), "w": np.zeros(4), "z": np.zeros(4)}
    alpha = build_permutation("alpha2", set(), 4, scores)
    assert alpha.order.tolist() == [1, 3, 0, 2]
    assert alpha.prefix_size == 0


def test_alpha_prefix_rule_and_orders():
    scores = {"f": np.array([0.3, 0.9, -0.1, 0.5, 0.0]),
              "w": np.array([1.0, 2.0, 3.0, 4.0, 5.0]),
              "z": np.array([0.5, 0.1, 0.1, 0.0, 0.2])}
    assert build_permutation("alpha2", {0, 2}, 5, scores).order.tolist() == [0, 2, 1, 3, 4]
    assert build_permutation("alpha3", {0, 2}, 5, scores).order.tolist() == [2, 0, 4, 3, 1]
    # ascending z, ties by id
    assert build_permutation("alpha4", {0, 2}, 5, scores).order.tolist() == [2, 0, 3, 1, 4]
    for strategy in ("alpha1", "alpha2", "alpha3", "alpha4"):
        alpha = build_permutation(strategy, {0, 2}, 5, scores, rng=3)
        assert set(alpha.order[:2].tolist()) == {0, 2}
        assert alpha.prefix_of == {0, 2}


def test_alpha1_deterministic():
    a = build_permutation("alpha1", {1, 4}, 8, rng=11)
    b = build_permutation("alpha1", {1, 4}, 8, rng=11)
    assert a.order.tolist() == b.order.tolist()


def test_bad_permutation():
    with pytest.raises(ValidationError):
        PermutationOrder(np.array([0, 0, 1]), 1)
    with pytest.raises(ValidationError):
        build_permutation("alpha9", set(), 3)
