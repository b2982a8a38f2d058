"""Reverse-reachable set sampling and the coverage estimators built on it.

Two collections are drawn: weighted-root RR-sets (root chosen with probability p(u)/p(V))
for the benefit term w, and paired RR-sets (root chosen with probability l(u)/l(V), one
reverse closure per cascade) for the disturbance term z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateProfileError, ValidationError
from .graph import BenefitProfile, SocialNetwork


class CoinStream:
    """Uniform draws from a numpy Generator, fetched in blocks to keep per-coin cost low."""

    def __init__(self, rng: np.random.Generator, block: int = 8192):
        self.rng = rng
        self.block = block
        self._buf: list[float] = []
        self._i = 0

    def __call__(self) -> float:
        if self._i == len(self._buf):
            self._buf = self.rng.random(self.block).tolist()
            self._i = 0
        x = self._buf[self._i]
        self._i += 1
        return x


class RootSampler:
    """Weighted node sampler: cumulative table plus binary search."""

    def __init__(self, weights: np.ndarray):
        self.cum = np.cumsum(weights)
        self.total = float(self.cum[-1]) if len(self.cum) else 0.0
        if self.total <= 0:
            raise DegenerateProfileError("degenerate benefit profile: root weights sum to zero")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size) * self.total
        idx = np.searchsorted(self.cum, u, side="right")
        return np.minimum(idx, len(self.cum) - 1)


def reverse_closure(root: int, sources: list[list[int]], probs: list[list[float]], coin) -> list[int]:
    """Nodes reaching ``root`` in a lazily sampled realization; each edge's coin is flipped on first use."""
    seen = {root}
    stack = [root]
    while stack:
        v = stack.pop()
        for u, pr in zip(sources[v], probs[v]):
            if u not in seen and (pr >= 1.0 or coin() < pr):
                seen.add(u)
                stack.append(u)
    return sorted(seen)


@dataclass(frozen=True)
class WeightedRRSet:
    root: int
    members: frozenset


@dataclass(frozen=True)
class PairedRRSet:
    root: int
    members_p: frozenset
    members_r: frozenset


def _gen(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_weighted_rr(network: SocialNetwork, profile: BenefitProfile, rng_stream) -> WeightedRRSet:
    rng = _gen(rng_stream)
    root = int(RootSampler(profile.p).draw(rng, 1)[0])
    src, probs = network.in_lists("positive")
    return WeightedRRSet(root, frozenset(reverse_closure(root, src, probs, CoinStream(rng, 64))))


def sample_paired_rr(network: SocialNetwork, profile: BenefitProfile, rng_stream) -> PairedRRSet:
    rng = _gen(rng_stream)
    root = int(RootSampler(profile.l).draw(rng, 1)[0])
    coin = CoinStream(rng, 64)
    members_p = reverse_closure(root, *network.in_lists("positive"), coin)
    members_r = reverse_closure(root, *network.in_lists("rival"), coin)
    return PairedRRSet(root, frozenset(members_p), frozenset(members_r))


def _csr(sets: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(sets) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(s) for s in sets])
    flat = np.fromiter((x for s in sets for x in s), dtype=np.int64, count=int(ptr[-1]))
    return ptr, flat


class CoverageOracle:
    """Weighted coverage b(S) = sum of weights of RR-sets hit by S.

    Submodular and monotone for nonnegative weights. Batch marginal queries are computed
    from cover counts in one pass over the flattened member lists.
    """

    def __init__(self, n: int, ptr: np.ndarray, members: np.ndarray, weights: np.ndarray):
        self.n = n
        self.ptr = ptr
        self.members = members
        self.weights = np.asarray(weights, dtype=float)
        self.num_sets = len(ptr) - 1
        self.set_of = np.repeat(np.arange(self.num_sets), np.diff(ptr))

    def _node_mask(self, nodes) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        nodes = list(nodes)
        if nodes:
            mask[nodes] = True
        return mask

    def cover_counts(self, nodes) -> np.ndarray:
        if self.num_sets == 0:
            return np.zeros(0, dtype=np.int64)
        hit = self._node_mask(nodes)[self.members].astype(np.int64)
        return np.add.reduceat(hit, self.ptr[:-1]) if len(hit) else np.zeros(self.num_sets, np.int64)

    def covered(self, nodes) -> np.ndarray:
        return self.cover_counts(nodes) > 0

    def __call__(self, nodes) -> float:
        return float(self.weights[self.covered(nodes)].sum())

    def _credit(self, entry_mask: np.ndarray) -> np.ndarray:
        return np.bincount(self.members, weights=np.where(entry_mask, self.weights[self.set_of], 0.0),
                           minlength=self.n)

    def gain_empty(self) -> np.ndarray:
        """b(j | {}) for every j."""
        return self._credit(np.ones(len(self.members), dtype=bool))

    def gain_given(self, x) -> np.ndarray:
        """b(j | X) for every j; zero for j in X."""
        counts = self.cover_counts(x)
        return self._credit(counts[self.set_of] == 0)

    def loss_from(self, x) -> np.ndarray:
        """b(j | X - j) for j in X; zero outside X."""
        counts = self.cover_counts(x)
        in_x = self._node_mask(x)
        return self._credit((counts[self.set_of] == 1) & in_x[self.members])

    def loss_from_all(self) -> np.ndarray:
        """b(j | V - j): weight of sets whose only member is j."""
        sizes = np.diff(self.ptr)
        return self._credit(sizes[self.set_of] == 1)

    def prefix_gains(self, order) -> np.ndarray:
        """b(S_i) - b(S_{i-1}) credited to order[i-1]: each set goes to its earliest member."""
        order = np.asarray(order)
        if self.num_sets == 0:
            return np.zeros(self.n)
        pos = np.empty(self.n, dtype=np.int64)
        pos[order] = np.arange(self.n)
        first = np.minimum.reduceat(pos[self.members], self.ptr[:-1])
        return np.bincount(order[first], weights=self.weights, minlength=self.n)


class Bounds(NamedTuple):
    w_hat: float
    z_hat: float
    f_hat: float
    w_u: float
    w_l: float
    z_u: float
    z_l: float
    f_u: float
    f_l: float
    slack_w: float
    slack_z: float


def hoeffding_slack(total: float, count: int, delta: float) -> float:
    """total * sqrt(ln(4/delta) / (2 count)); zero when there are no samples to bound."""
    if not 0 < delta < 1:
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    if count == 0:
        return 0.0
    return total * math.sqrt(math.log(4.0 / delta) / (2.0 * count))


@dataclass(eq=False)
class RRCollection:
    network: SocialNetwork
    profile: BenefitProfile
    w_roots: np.ndarray
    w_ptr: np.ndarray
    w_members: np.ndarray
    z_roots: np.ndarray
    zp_ptr: np.ndarray
    zp_members: np.ndarray
    zr_ptr: np.ndarray
    zr_members: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.lam < 1:
            raise ValidationError("need at least one weighted RR-set")
        if self.mu == 0 and self.profile.l_total > 0:
            raise ValidationError("paired RR-sets may be empty only when l(V) = 0")

    @property
    def lam(self) -> int:
        return len(self.w_roots)

    @property
    def mu(self) -> int:
        return len(self.z_roots)

    @property
    def n(self) -> int:
        return self.network.n

    def w_sets(self) -> list[WeightedRRSet]:
        return [WeightedRRSet(int(r), frozenset(self.w_members[a:b].tolist()))
                for r, a, b in zip(self.w_roots, self.w_ptr[:-1], self.w_ptr[1:])]

    def z_sets(self) -> list[PairedRRSet]:
        return [PairedRRSet(int(r), frozenset(self.zp_members[a:b].tolist()), frozenset(self.zr_members[c:d].tolist()))
                for r, a, b, c, d in zip(self.z_roots, self.zp_ptr[:-1], self.zp_ptr[1:],
                                         self.zr_ptr[:-1], self.zr_ptr[1:])]

    def w_oracle(self) -> CoverageOracle:
        if "w" not in self._cache:
            weights = np.full(self.lam, self.profile.p_total / self.lam)
            self._cache["w"] = CoverageOracle(self.n, self.w_ptr, self.w_members, weights)
        return self._cache["w"]

    def rival_hits(self, s_r) -> np.ndarray:
        """Per paired set: does the rival seed set reach its root under the rival realization."""
        key = ("r", frozenset(s_r))
        if key not in self._cache:
            probe = CoverageOracle(self.n, self.zr_ptr, self.zr_members, np.zeros(self.mu))
            self._cache[key] = probe.covered(s_r)
        return self._cache[key]

    def positive_hits(self, s_p) -> np.ndarray:
        """Per paired set: does ``s_p`` reach its root under the positive realization."""
        if "zp" not in self._cache:
            self._cache["zp"] = CoverageOracle(self.n, self.zp_ptr, self.zp_members, np.zeros(self.mu))
        return self._cache["zp"].covered(s_p)

    def z_oracle(self, s_r) -> CoverageOracle:
        key = ("z", frozenset(s_r))
        if key not in self._cache:
            unit = self.profile.l_total / self.mu if self.mu else 0.0
            weights = np.where(self.rival_hits(s_r), unit, 0.0)
            self._cache[key] = CoverageOracle(self.n, self.zp_ptr, self.zp_members, weights)
        return self._cache[key]

    def inverted_w(self) -> list[np.ndarray]:
        """node -> ids of weighted RR-sets containing it."""
        return _invert(self.n, self.w_oracle())

    def inverted_z(self) -> list[np.ndarray]:
        """node -> ids of paired RR-sets whose positive-side members contain it."""
        self.positive_hits(())
        return _invert(self.n, self._cache["zp"])

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "mu": self.mu,
            "w_sets": [[s.root, sorted(s.members)] for s in self.w_sets()],
            "z_sets": [[s.root, sorted(s.members_p), sorted(s.members_r)] for s in self.z_sets()],
        }

    @classmethod
    def from_json(cls, doc: dict, network: SocialNetwork, profile: BenefitProfile) -> "RRCollection":
        w = doc["w_sets"]
        z = doc["z_sets"]
        w_ptr, w_members = _csr([m for _, m in w])
        zp_ptr, zp_members = _csr([s[1] for s in z])
        zr_ptr, zr_members = _csr([s[2] for s in z])
        coll = cls(network, profile, np.array([r for r, _ in w], dtype=np.int64), w_ptr, w_members,
                   np.array([s[0] for s in z], dtype=np.int64), zp_ptr, zp_members, zr_ptr, zr_members)
        if coll.lam != doc["lambda"] or coll.mu != doc["mu"]:
            raise ValidationError("collection snapshot counts do not match its set lists")
        return coll


def _invert(n: int, oracle: CoverageOracle) -> list[np.ndarray]:
    order = np.argsort(oracle.members, kind="stable")
    bounds = np.searchsorted(oracle.members[order], np.arange(n + 1))
    sets = oracle.set_of[order]
    return [sets[bounds[v]:bounds[v + 1]] for v in range(n)]


def sample_collection(network: SocialNetwork, profile: BenefitProfile, lam: int, mu: int,
                      rng_w, rng_z) -> RRCollection:
    """Draw ``lam`` weighted RR-sets and ``mu`` paired RR-sets (none if l(V) = 0)."""
    if lam < 1:
        raise ValidationError("lambda must be >= 1")
    if mu < 0:
        raise ValidationError("mu must be >= 0")
    rng_w, rng_z = _gen(rng_w), _gen(rng_z)

    roots = RootSampler(profile.p).draw(rng_w, lam)
    coin = CoinStream(rng_w)
    src_p, prob_p = network.in_lists("positive")
    w_sets = [reverse_closure(int(r), src_p, prob_p, coin) for r in roots]
    w_ptr, w_members = _csr(w_sets)

    if profile.l_total > 0 and mu > 0:
        z_roots = RootSampler(profile.l).draw(rng_z, mu)
        coin = CoinStream(rng_z)
        src_r, prob_r = network.in_lists("rival")
        zp, zr = [], []
        for r in z_roots.tolist():
            zp.append(reverse_closure(r, src_p, prob_p, coin))
            zr.append(reverse_closure(r, src_r, prob_r, coin))
    else:
        z_roots, zp, zr = np.zeros(0, dtype=np.int64), [], []
    zp_ptr, zp_members = _csr(zp)
    zr_ptr, zr_members = _csr(zr)
    return RRCollection(network, profile, np.asarray(roots, dtype=np.int64), w_ptr, w_members,
                        np.asarray(z_roots, dtype=np.int64), zp_ptr, zp_members, zr_ptr, zr_members)


def estimate_w(collection: RRCollection, s_p) -> float:
    hits = int(collection.w_oracle().covered(s_p).sum())
    return collection.profile.p_total * hits / collection.lam


def estimate_z(collection: RRCollection, s_p, s_r) -> float:
    if collection.mu == 0:
        return 0.0
    both = collection.positive_hits(s_p) & collection.rival_hits(s_r)
    return collection.profile.l_total * int(both.sum()) / collection.mu


def estimate_f(collection: RRCollection, s_p, s_r) -> float:
    return estimate_w(collection, s_p) - estimate_z(collection, s_p, s_r)


def confidence_bounds(collection: RRCollection, s_p, s_r, delta: float) -> Bounds:
    """Hoeffding bounds on w and z (each side holds w.p. >= 1 - delta/4), combined for f."""
    slack_w = hoeffding_slack(collection.profile.p_total, collection.lam, delta)
    slack_z = hoeffding_slack(collection.profile.l_total, collection.mu, delta)
    w = estimate_w(collection, s_p)
    z = estimate_z(collection, s_p, s_r)
    w_u, w_l = w + slack_w, w - slack_w
    z_u, z_l = z + slack_z, z - slack_z
    return Bounds(w, z, w - z, w_u, w_l, z_u, z_l, w_u - z_l, w_l - z_u, slack_w, slack_z)
