"""Experiment plumbing behind the CLI: seeded streams, rival selection, manifests, result tables,
and the small-instance verification suite."""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import ModularBound, build_permutation, modular_lower, modular_upper
from .diffusion import exact_f
from .errors import ValidationError
from .graph import (BenefitProfile, SocialNetwork, generate_benefit_profile, load_edge_list, load_weights,
                    random_network)
from .ris import RRCollection, confidence_bounds, sample_collection
from .solver import (VARIANTS, SolverConfig, baseline_infmax, baseline_maxdegree, baseline_random,
                     evaluate_solution, greedy, modular_max, modular_modular)

METHODS = ("random", "maxdegree", "infmax", "greedy", "modmod1", "modmod2")
STREAMS = ("weights", "w_sampling", "z_sampling", "alpha1", "random_baseline", "monte_carlo", "verify")
CSV_FIELDS = ["method", "k", "theta", "alpha", "delta", "solution_size", "solution", "f_hat", "f_lower",
              "pi_hat", "f_upper_opt", "ratio", "iterations", "terminated"]


def stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named component of one experiment seed."""
    return np.random.default_rng([seed, STREAMS.index(name)])


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class ExperimentSpec:
    dataset: str
    prob_rule: str = "indegree"
    undirected: bool = False
    weights: str | None = None
    rival: str = "top:10"
    theta: int = 20000
    budgets: list = field(default_factory=lambda: [5, 10, 15, 20, 25, 30])
    methods: list = field(default_factory=lambda: list(METHODS))
    delta: float = 0.1
    alpha: str = "alpha2"
    seed: int = 0
    max_iterations: int = 100

    def validate(self, n: int | None = None) -> None:
        if self.theta < 1:
            raise ValidationError("theta must be >= 1")
        if not self.budgets:
            raise ValidationError("at least one budget k is required")
        for k in self.budgets:
            if k < 0 or (n is not None and k > n):
                raise ValidationError(f"budget {k} outside 0..{n}")
        for m in self.methods:
            if m not in METHODS:
                raise ValidationError(f"unknown method {m!r}")
        if not 0 < self.delta < 1:
            raise ValidationError("delta must lie in (0, 1)")


def load_instance(spec: ExperimentSpec) -> tuple[SocialNetwork, BenefitProfile]:
    rule = spec.prob_rule
    if rule not in ("indegree", "explicit"):
        rule = rule if rule.startswith("constant:") else f"constant:{rule}"
    network = load_edge_list(spec.dataset, directed=not spec.undirected, probability_rule=rule)
    if spec.weights:
        profile = load_weights(spec.weights, network)
    else:
        profile = generate_benefit_profile(network, stream(spec.seed, "weights"))
    return network, profile


def select_rival(network: SocialNetwork, rule: str, seed: int = 0) -> frozenset:
    """``top:r`` (highest out-degree, ties by id), ``random:r``, ``ids:a,b,c`` (original ids), or ``none``."""
    kind, _, arg = rule.partition(":")
    if kind == "none" or rule == "":
        return frozenset()
    if kind == "ids":
        return network.to_dense_ids(int(x) for x in arg.split(",") if x.strip())
    try:
        r = int(arg)
    except ValueError:
        raise ValidationError(f"bad rival rule {rule!r}") from None
    r = min(r, network.n)
    if kind == "top":
        return baseline_maxdegree(network, r)
    if kind == "random":
        return frozenset(stream(seed, "random_baseline").choice(network.n, size=r, replace=False).tolist())
    raise ValidationError(f"bad rival rule {rule!r}")


def build_collection(network, profile, theta: int, seed: int) -> RRCollection:
    return sample_collection(network, profile, theta, theta, stream(seed, "w_sampling"), stream(seed, "z_sampling"))


def solve_rows(spec: ExperimentSpec, network: SocialNetwork, collection: RRCollection, s_r,
               with_timing: bool = False) -> tuple[list[dict], list[dict]]:
    """One CSV row and one JSON report per (method, k)."""
    rows, reports = [], []
    for method, k in itertools.product(spec.methods, spec.budgets):
        t0 = time.perf_counter()
        if method in VARIANTS:
            alpha_seed = int(stream(spec.seed, "alpha1").integers(2**31))
            config = SolverConfig(k, method, spec.alpha, spec.delta, spec.max_iterations, alpha_seed)
            report = modular_modular(collection, s_r, config)
        elif method == "greedy":
            report = greedy(collection, s_r, k, spec.delta)
        else:
            if method == "random":
                seeds = baseline_random(network, k, stream(spec.seed, "random_baseline"))
            elif method == "maxdegree":
                seeds = baseline_maxdegree(network, k)
            else:
                seeds = baseline_infmax(collection, k)
            report = evaluate_solution(collection, s_r, seeds, method, spec.delta)
        report.wall_time = time.perf_counter() - t0
        row = {
            "method": method, "k": k, "theta": spec.theta, "alpha": spec.alpha if method in VARIANTS else "",
            "delta": spec.delta, "solution_size": len(report.solution),
            "solution": " ".join(map(str, network.to_labels(report.solution))),
            "f_hat": report.f_hat, "f_lower": report.f_lower,
            "pi_hat": _opt(report.pi_hat), "f_upper_opt": _opt(report.f_upper_opt), "ratio": _opt(report.ratio),
            "iterations": report.iterations, "terminated": report.terminated,
        }
        if with_timing:
            row["wall_time"] = report.wall_time
        rows.append(row)
        reports.append({"k": k, **report.to_dict(network)})
    return rows, reports


def _opt(x):
    return "" if x is None else x


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    fields = CSV_FIELDS + (["wall_time"] if rows and "wall_time" in rows[0] else [])
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def write_manifest(path, command: str, params: dict, outputs: dict, timings: dict, extra: dict | None = None):
    doc = {
        "command": command,
        "version": __version__,
        "numpy": np.__version__,
        "params": params,
        "outputs": {name: sha256_file(p) for name, p in outputs.items()},
        "timings": timings,
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


def spec_params(spec: ExperimentSpec) -> dict:
    return asdict(spec)


# --- exhaustive helpers for tiny instances -------------------------------------------------

def subsets_up_to(n: int, k: int):
    for size in range(min(k, n) + 1):
        yield from (frozenset(c) for c in itertools.combinations(range(n), size))


def exhaustive_optimum(fn, n: int, k: int) -> tuple[frozenset, float]:
    best, best_val = frozenset(), -math.inf
    for y in subsets_up_to(n, k):
        v = fn(y)
        if v > best_val + 1e-12:
            best, best_val = y, v
    return best, best_val


def brute_force_modular_max(lower: ModularBound, upper: ModularBound, k: int) -> float:
    return max(lower(y) - upper(y) for y in subsets_up_to(len(lower.unit_value), k))


# --- verification suite --------------------------------------------------------------------

def verify_suite(network: SocialNetwork, profile: BenefitProfile, s_r, k: int, theta: int, delta: float,
                 trials: int, seed: int, estimator_bias: float = 1.0) -> list[dict]:
    """Oracle checks on a small instance; ``estimator_bias`` != 1 corrupts f-hat as a negative control."""
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    if network.m > 12 or network.n > 10:
        raise ValidationError("verify needs a small instance (n <= 10, m <= 12)")
    s_r = frozenset(s_r)
    rng = stream(seed, "verify")
    exact_cache: dict = {}

    def f_exact(y):
        y = frozenset(y)
        if y not in exact_cache:
            exact_cache[y] = exact_f(network, profile, y, s_r)
        return exact_cache[y]

    results = []

    # unbiasedness: average estimate over independent collections vs the exact value
    probe = frozenset(rng.choice(network.n, size=max(1, min(k, network.n)), replace=False).tolist())
    truth = f_exact(probe)
    estimates, certificates = [], []
    _, opt = exhaustive_optimum(lambda y: f_exact(y).f, network.n, k)
    for t in range(trials):
        coll = sample_collection(network, profile, theta, theta, rng, rng)
        b = confidence_bounds(coll, probe, s_r, delta)
        estimates.append((b.w_hat * estimator_bias, b.z_hat * estimator_bias, b.f_hat * estimator_bias))
        rep = modular_modular(coll, s_r, SolverConfig(k, "modmod2", "alpha2", delta, 100, seed + t))
        certificates.append((f_exact(rep.solution).f, rep.ratio))
    est = np.array(estimates)
    pw = truth.w / profile.p_total
    pz = truth.z / profile.l_total if profile.l_total > 0 else 0.0
    se_w = profile.p_total * math.sqrt(pw * (1 - pw) / theta)
    se_z = profile.l_total * math.sqrt(max(pz * (1 - pz), 0.0) / theta)
    se = np.array([se_w, se_z, math.hypot(se_w, se_z)]) / math.sqrt(trials)
    err = np.abs(est.mean(axis=0) - np.array([truth.w, truth.z, truth.f]))
    ok = bool(np.all(err <= 3 * se + 1e-12))
    results.append({"property": "estimator_unbiased", "passed": ok,
                    "exact": list(truth), "mean_estimate": est.mean(axis=0).tolist(), "abs_error": err.tolist(),
                    "tolerance": (3 * se).tolist()})

    hits = sum(fo >= ratio * opt - 1e-12 for fo, ratio in certificates)
    floor = (1 - delta) * trials - 3 * math.sqrt(delta * (1 - delta) * trials)
    results.append({"property": "certificate_coverage", "passed": hits >= floor, "hits": hits,
                    "trials": trials, "required": floor, "max_f": opt})

    mismatches = 0
    for _ in range(max(20, trials)):
        size = int(rng.integers(1, 9))
        lower = ModularBound(float(rng.normal()), rng.normal(size=size))
        upper = ModularBound(float(rng.normal()), rng.normal(size=size))
        kk = int(rng.integers(0, size + 1))
        y = modular_max(lower, upper, kk)
        if abs((lower(y) - upper(y)) - brute_force_modular_max(lower, upper, kk)) > 1e-9:
            mismatches += 1
    results.append({"property": "modular_max_optimal", "passed": mismatches == 0, "mismatches": mismatches})

    coll = sample_collection(network, profile, theta, theta, rng, rng)
    violations = 0
    scores = {"f": np.zeros(network.n), "w": np.zeros(network.n), "z": np.zeros(network.n)}
    for oracle in (coll.w_oracle(), coll.z_oracle(s_r)):
        for _ in range(max(5, trials // 4)):
            x = frozenset(np.flatnonzero(rng.random(network.n) < 0.4).tolist())
            alpha = build_permutation("alpha1", x, network.n, scores, rng)
            lo = modular_lower(oracle, x, alpha)
            ups = [modular_upper(oracle, x, v) for v in (1, 2)]
            for y in subsets_up_to(network.n, network.n):
                b = oracle(y)
                if lo(y) > b + 1e-9 or any(u(y) < b - 1e-9 for u in ups):
                    violations += 1
            if abs(lo(x) - oracle(x)) > 1e-9 or any(abs(u(x) - oracle(x)) > 1e-9 for u in ups):
                violations += 1
    results.append({"property": "bound_sandwich", "passed": violations == 0, "violations": violations})
    return results


def default_verify_instance(seed: int) -> tuple[SocialNetwork, BenefitProfile, frozenset]:
    network = random_network(6, 8, np.random.default_rng([seed, 99]))
    profile = generate_benefit_profile(network, stream(seed, "weights"))
    return network, profile, frozenset({0})


def bench(spec: ExperimentSpec, network, profile, s_r, thetas, repeats: int, k: int) -> list[dict]:
    rows = []
    for theta in thetas:
        for method in ("modmod1", "modmod2"):
            times, ratios = [], []
            for r in range(repeats):
                t0 = time.perf_counter()
                coll = build_collection(network, profile, theta, spec.seed + r)
                t1 = time.perf_counter()
                rep = modular_modular(coll, s_r, SolverConfig(k, method, spec.alpha, spec.delta,
                                                              spec.max_iterations, spec.seed + r))
                times.append((t1 - t0, time.perf_counter() - t1))
                ratios.append(rep.ratio)
            rows.append({"theta": theta, "method": method, "k": k, "repeats": repeats,
                         "median_sample_time": statistics.median(t for t, _ in times),
                         "median_solve_time": statistics.median(s for _, s in times),
                         "median_ratio": statistics.median(ratios)})
    return rows
