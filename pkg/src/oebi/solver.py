"""Seed selection on RR estimates: the modular-modular procedure, greedy, heuristic baselines,
and the data-dependent approximation certificate for the modular-modular solution."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bounds import STRATEGIES, ModularBound, build_permutation, modular_lower, modular_upper
from .errors import ValidationError
from .graph import SocialNetwork
from .ris import RRCollection, confidence_bounds, estimate_f, hoeffding_slack

VARIANTS = {"modmod1": 1, "modmod2": 2}
DELTA_CONVENTION = "delta in (0,1); each Hoeffding side w.p. >= 1-delta/4; certificate w.p. >= 1-delta"


@dataclass(frozen=True)
class SolverConfig:
    k: int
    upper_bound_variant: str = "modmod2"
    permutation_strategy: str = "alpha2"
    delta: float = 0.1
    max_iterations: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 0:
            raise ValidationError("budget k must be nonnegative")
        if self.upper_bound_variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.upper_bound_variant!r}")
        if self.permutation_strategy not in STRATEGIES:
            raise ValidationError(f"unknown permutation strategy {self.permutation_strategy!r}")
        if not 0 < self.delta < 1:
            raise ValidationError("delta must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")


@dataclass
class SolverReport:
    method: str
    solution: frozenset
    rival: frozenset
    f_hat: float
    f_lower: float
    f_upper_opt: float | None = None
    pi_hat: float | None = None
    pi_binding: str | None = None
    ratio: float | None = None
    iterate_history: list = field(default_factory=list)
    iterations: int = 0
    terminated: str = ""
    wall_time: float = 0.0

    def to_dict(self, network: SocialNetwork | None = None) -> dict:
        ids = network.to_labels if network is not None else sorted
        return {
            "method": self.method,
            "solution": ids(self.solution),
            "rival": ids(self.rival),
            "f_hat": self.f_hat,
            "f_lower": self.f_lower,
            "f_upper_opt": self.f_upper_opt,
            "pi_hat": self.pi_hat,
            "pi_binding": self.pi_binding,
            "ratio": self.ratio,
            "iterate_history": [[ids(x), v] for x, v in self.iterate_history],
            "iterations": self.iterations,
            "terminated": self.terminated,
            "wall_time": self.wall_time,
            "delta_convention": DELTA_CONVENTION,
            "local_maximality_certified": False,
        }


class PiUpper(NamedTuple):
    value: float
    binding: str
    by_variant: dict


class Certificate(NamedTuple):
    ratio: float
    numerator: float
    denominator: float
    pi_hat: float
    binding: str


def singleton_scores(collection: RRCollection, s_r) -> dict:
    w = collection.w_oracle().gain_empty()
    z = collection.z_oracle(s_r).gain_empty()
    return {"w": w, "z": z, "f": w - z}


def _best_units(net: np.ndarray, k: int) -> list[int]:
    order = np.lexsort((np.arange(len(net)), -net))
    chosen = []
    for u in order[:k]:
        if net[u] < 0:
            break
        chosen.append(int(u))
    return chosen


def modular_max(lower: ModularBound, upper: ModularBound, k: int) -> frozenset:
    """Exact argmax over |Y| <= k of lower(Y) - upper(Y) for modular bounds.

    Takes nodes in decreasing net unit value and stops at the first negative one.
    """
    return frozenset(_best_units(lower.unit_value - upper.unit_value, k))


def modular_modular(collection: RRCollection, s_r, config: SolverConfig) -> SolverReport:
    """Iterate X <- argmax_{|Y|<=k} h_w(Y) - m_z(Y) until X repeats, starting from the empty set."""
    t0 = time.perf_counter()
    s_r = frozenset(s_r)
    n = collection.n
    w_oracle, z_oracle = collection.w_oracle(), collection.z_oracle(s_r)
    scores = singleton_scores(collection, s_r)
    rng = np.random.default_rng(config.rng_seed)
    variant = VARIANTS[config.upper_bound_variant]

    x = frozenset()
    history = [(x, estimate_f(collection, x, s_r))]
    visited = {x}
    iterations, terminated = 0, "max_iterations"
    while iterations < config.max_iterations:
        alpha = build_permutation(config.permutation_strategy, x, n, scores, rng)
        y = modular_max(modular_lower(w_oracle, x, alpha), modular_upper(z_oracle, x, variant), config.k)
        iterations += 1
        if y == x:
            terminated = "fixpoint"
            break
        if y in visited:
            terminated = "revisit"
            break
        x = y
        visited.add(x)
        history.append((x, estimate_f(collection, x, s_r)))

    # latest iterate wins ties
    best = max(reversed(history), key=lambda item: item[1])[0]
    report = _report(collection, s_r, best, config.delta, config.upper_bound_variant)
    report.iterate_history = history
    report.iterations = iterations
    report.terminated = terminated
    cert = approximation_certificate(collection, report, config)
    report.pi_hat, report.pi_binding = cert.pi_hat, cert.binding
    report.f_upper_opt, report.ratio = cert.denominator, cert.ratio
    report.wall_time = time.perf_counter() - t0
    return report


def _report(collection, s_r, solution, delta, method) -> SolverReport:
    b = confidence_bounds(collection, solution, s_r, delta)
    return SolverReport(method=method, solution=frozenset(solution), rival=frozenset(s_r),
                        f_hat=b.f_hat, f_lower=b.f_l)


def _greedy(collection: RRCollection, s_r, k: int, use_z: bool) -> tuple[list[int], list]:
    w_or = collection.w_oracle()
    z_or = collection.z_oracle(s_r)
    inv_w = collection.inverted_w()
    inv_z = collection.inverted_z() if use_z else None
    w_left = w_or.weights.copy()
    z_left = z_or.weights.copy()
    chosen: list[int] = []
    history = [(frozenset(), 0.0)]
    value = 0.0
    for _ in range(min(k, collection.n)):
        gain = np.bincount(w_or.members, weights=w_left[w_or.set_of], minlength=collection.n)
        if use_z and len(z_left):
            gain -= np.bincount(z_or.members, weights=z_left[z_or.set_of], minlength=collection.n)
        gain[chosen] = -np.inf
        u = int(np.argmax(gain))
        if gain[u] < 0:
            break
        chosen.append(u)
        w_left[inv_w[u]] = 0.0
        if use_z:
            z_left[inv_z[u]] = 0.0
        value += gain[u]
        history.append((frozenset(chosen), value))
    return chosen, history


def greedy(collection: RRCollection, s_r, k: int, delta: float = 0.1) -> SolverReport:
    """Add the node with the largest marginal f-hat until k nodes or no nonnegative gain remains."""
    t0 = time.perf_counter()
    chosen, history = _greedy(collection, s_r, k, use_z=True)
    report = _report(collection, s_r, chosen, delta, "greedy")
    report.iterate_history = [(x, estimate_f(collection, x, s_r)) for x, _ in history]
    report.iterations = len(chosen)
    report.wall_time = time.perf_counter() - t0
    return report


def baseline_infmax(collection: RRCollection, k: int) -> frozenset:
    """Greedy on the benefit estimate w-hat alone, ignoring the rival."""
    return frozenset(_greedy(collection, (), k, use_z=False)[0])


def baseline_random(network: SocialNetwork, k: int, rng) -> frozenset:
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if k > network.n:
        raise ValidationError("k exceeds node count")
    return frozenset(rng.choice(network.n, size=k, replace=False).tolist())


def baseline_maxdegree(network: SocialNetwork, k: int) -> frozenset:
    if k > network.n:
        raise ValidationError("k exceeds node count")
    deg = network.out_degree()
    return frozenset(np.lexsort((np.arange(network.n), -deg))[:k].tolist())


def evaluate_solution(collection: RRCollection, s_r, solution, method: str, delta: float = 0.1) -> SolverReport:
    """Report for a seed set chosen outside the solvers (baselines)."""
    report = _report(collection, s_r, solution, delta, method)
    report.iterate_history = [(report.solution, report.f_hat)]
    return report


def pi_upper(collection: RRCollection, s_r, x, config: SolverConfig) -> PiUpper:
    """Upper bound on max_{|Y|<=k} f-hat(Y) from modular bounds tight at X.

    Each variant's max_Y m_w(Y) - h_z(Y) is solved exactly; the smaller is returned.
    """
    x = frozenset(x)
    n = collection.n
    w_oracle, z_oracle = collection.w_oracle(), collection.z_oracle(s_r)
    scores = singleton_scores(collection, s_r)
    alpha = build_permutation(config.permutation_strategy, x, n, scores, np.random.default_rng(config.rng_seed))
    lower_z = modular_lower(z_oracle, x, alpha)
    values = {}
    for name, variant in VARIANTS.items():
        upper_w = modular_upper(w_oracle, x, variant)
        net = upper_w.unit_value - lower_z.unit_value
        picked = _best_units(net, config.k)
        values[name] = float(upper_w.base_value - lower_z.base_value + net[picked].sum())
    binding = min(values, key=values.get)
    return PiUpper(values[binding], binding, values)


def approximation_certificate(collection: RRCollection, report: SolverReport, config: SolverConfig) -> Certificate:
    """(w_l - z_u)(S) / (pi-hat(S) + slack_w + slack_z), valid with probability >= 1 - delta."""
    b = confidence_bounds(collection, report.solution, report.rival, config.delta)
    pi = pi_upper(collection, report.rival, report.solution, config)
    slack_w = hoeffding_slack(collection.profile.p_total, collection.lam, config.delta)
    slack_z = hoeffding_slack(collection.profile.l_total, collection.mu, config.delta)
    denominator = pi.value + slack_w + slack_z
    if not denominator > 0:
        raise ValidationError("degenerate certificate: nonpositive denominator")
    return Certificate(b.f_l / denominator, b.f_l, denominator, pi.value, pi.binding)
