"""Live-edge realizations of the independent cascade model and ground-truth objective oracles.

Forward diffusion under IC is simulated as reachability over a pre-sampled live-edge
graph. ``exact_f`` enumerates every realization pair and is meant for tiny graphs only.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import GraphTooLargeError, ValidationError
from .graph import BenefitProfile, SocialNetwork

EXACT_MAX_EDGES = 12


@dataclass(frozen=True, eq=False)
class Realization:
    network: SocialNetwork
    live: np.ndarray  # bool per edge, aligned with network.src/dst
    cascade: str = "positive"

    @property
    def live_edges(self) -> list[tuple[int, int]]:
        idx = np.flatnonzero(self.live)
        return list(zip(self.network.src[idx].tolist(), self.network.dst[idx].tolist()))


class ExactValue(NamedTuple):
    f: float
    w: float
    z: float


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_realization(network: SocialNetwork, cascade: str, rng_stream) -> Realization:
    probs = network.probs(cascade)
    live = _rng(rng_stream).random(network.m) < probs
    return Realization(network, live, cascade)


def reachable_set(realization: Realization, seeds: Iterable[int]) -> set[int]:
    out = realization.network.out_lists()
    live = realization.live
    reached = set(seeds)
    queue = deque(reached)
    while queue:
        u = queue.popleft()
        for e, v in out[u]:
            if live[e] and v not in reached:
                reached.add(v)
                queue.append(v)
    return reached


def per_realization_benefit(reach_p, reach_r, profile: BenefitProfile) -> float:
    """Benefit p(u) on nodes reached only by the positive cascade, q(u) on nodes reached by both."""
    reach_p, reach_r = set(reach_p), set(reach_r)
    only = reach_p - reach_r
    both = reach_p & reach_r
    return float(sum(profile.p[u] for u in only) + sum(profile.q[u] for u in both))


def per_realization_benefit_ds(reach_p, reach_r, profile: BenefitProfile) -> float:
    """Same quantity in difference form: sum of p over reach_p minus l over the overlap."""
    reach_p = set(reach_p)
    both = reach_p & set(reach_r)
    return float(sum(profile.p[u] for u in reach_p) - sum(profile.l[u] for u in both))


def _seed_mask(n: int, seeds) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    seeds = list(seeds)
    if seeds:
        if min(seeds) < 0 or max(seeds) >= n:
            raise ValidationError("seed outside node range")
        mask[seeds] = True
    return mask


def batch_reach(network: SocialNetwork, live: np.ndarray, seeds) -> np.ndarray:
    """Reachability from ``seeds`` in each row of a (batch, m) live-edge matrix; returns (batch, n) bools."""
    batch = live.shape[0]
    reach = np.tile(_seed_mask(network.n, seeds), (batch, 1))
    if network.m == 0 or not reach.any():
        return reach
    incidence = np.zeros((network.m, network.n), dtype=np.float32)
    incidence[np.arange(network.m), network.dst] = 1.0
    live_f = live.astype(np.float32)
    while True:
        pushed = (reach[:, network.src].astype(np.float32) * live_f) @ incidence > 0
        grown = reach | pushed
        if np.array_equal(grown, reach):
            return reach
        reach = grown


def _all_masks(m: int) -> np.ndarray:
    codes = np.arange(1 << m, dtype=np.int64)
    return ((codes[:, None] >> np.arange(m)) & 1).astype(bool)


def _mask_probs(live: np.ndarray, probs: np.ndarray) -> np.ndarray:
    return np.prod(np.where(live, probs, 1.0 - probs), axis=1)


def exact_f(network: SocialNetwork, profile: BenefitProfile, s_p, s_r) -> ExactValue:
    """Expected overall benefit by summing over all 2^m x 2^m realization pairs."""
    if network.m > EXACT_MAX_EDGES:
        raise GraphTooLargeError(
            f"exact evaluation enumerates 4^m realization pairs; m={network.m} exceeds {EXACT_MAX_EDGES}")
    masks = _all_masks(network.m)
    pr_g = _mask_probs(masks, network.pp)
    pr_h = _mask_probs(masks, network.pr)
    a = batch_reach(network, masks, s_p).astype(float)
    b = batch_reach(network, masks, s_r).astype(float)
    p, q, l = profile.p, profile.q, profile.l
    # pair[g, g'] = sum_{A \ B} p + sum_{A & B} q
    pair = (a @ p)[:, None] - (a * p) @ b.T + (a * q) @ b.T
    f = float(pr_g @ pair @ pr_h)
    w = float(pr_g @ (a @ p))
    z = float(pr_g @ ((a * l) @ b.T) @ pr_h)
    return ExactValue(f, w, z)


def monte_carlo_samples(network: SocialNetwork, profile: BenefitProfile, s_p, s_r, samples: int,
                        rng_stream, batch: int = 4096, components: bool = False):
    """Per-sample overall benefit over independently drawn (g, g') pairs.

    With ``components=True`` returns (f, w, z) per-sample arrays from the same draws.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    rng = _rng(rng_stream)
    s_p, s_r = list(s_p), list(s_r)
    out = np.empty(samples)
    w_out = np.empty(samples)
    z_out = np.empty(samples)
    done = 0
    while done < samples:
        size = min(batch, samples - done)
        live_g = rng.random((size, network.m)) < network.pp
        live_h = rng.random((size, network.m)) < network.pr
        a = batch_reach(network, live_g, s_p)
        b = batch_reach(network, live_h, s_r)
        out[done:done + size] = (a & ~b) @ profile.p + (a & b) @ profile.q
        w_out[done:done + size] = a @ profile.p
        z_out[done:done + size] = (a & b) @ profile.l
        done += size
    if components:
        return out, w_out, z_out
    return out


def monte_carlo_f(network: SocialNetwork, profile: BenefitProfile, s_p, s_r, samples: int,
                  rng_stream) -> float:
    return float(monte_carlo_samples(network, profile, s_p, s_r, samples, rng_stream).mean())


def sigma(network: SocialNetwork, s, samples: int, rng_stream) -> float:
    """Expected number of nodes activated from ``s`` (unit benefit, no rival)."""
    return monte_carlo_f(network, BenefitProfile.uniform(network.n), s, (), samples, rng_stream)


def exact_sigma(network: SocialNetwork, s) -> float:
    return exact_f(network, BenefitProfile.uniform(network.n), s, ()).f
